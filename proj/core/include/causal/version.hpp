#pragma once

namespace causal {

inline constexpr const char* kEngineVersion = "0.1.0";
inline constexpr const char* kReportSchema = "causal-report/1";
inline constexpr int kProtocolVersion = 1;

} // namespace causal
