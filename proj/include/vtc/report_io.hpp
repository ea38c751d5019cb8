#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtc/adjoint.hpp"
#include "vtc/forward.hpp"
#include "vtc/optimizer.hpp"
#include "vtc/smp.hpp"
#include "vtc/variation.hpp"

namespace vtc {

/// Shortest round-trip decimal form; "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double x);

/// Comma-separated table with a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row(const std::vector<std::string>& cells);
  CsvTable& row(const std::vector<double>& cells);
  std::string str() const;
  std::size_t rows() const noexcept { return rows_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

CsvTable mean_curve_csv(const MeanCurve& mean);
/// Right-continuous h values.
CsvTable rate_curve_csv(const RateCurve& rate);
CsvTable hbar_curve_csv(const HbarCurve& hbar);
CsvTable quotient_csv(const std::vector<QuotientRow>& rows);
CsvTable cost_quotient_csv(const std::vector<CostQuotientRow>& rows);
CsvTable cost_components_csv(const CostVariationResult& r);
/// Deterministic mode: t,p_1..p_m,q_11..q_md. Regression mode: one row per
/// time point and basis function with the fitted coefficients.
CsvTable adjoint_csv(const AdjointPath& adjoint);
/// t,u,lhs for scalar controls, t,u_1..u_k,lhs otherwise.
CsvTable probe_csv(const BranchReport& branch);
CsvTable trace_csv(const OptimizerTrace& trace);
/// Cell start times and values.
CsvTable control_csv(const PiecewiseConstant& control);

using Json = nlohmann::json;

Json to_json(const Vec& v);
Json to_json(const Estimate& e);
Json to_json(const TerminalTimeResult& t);
Json to_json(const PenaltyTerms& p);
Json to_json(const SmpReport& r);
Json to_json(const TauDerivativeResult& r);
Json to_json(const CostVariationResult& r);
Json to_json(const DualityResult& r);
Json to_json(const OptimizerResult& r);

/// Writes `text` to dir / name, creating dir. Throws Error on I/O failure.
void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text);
void write_csv(const std::filesystem::path& dir, const std::string& name, const CsvTable& table);
/// Pretty-printed with sorted keys and a trailing newline.
void write_json(const std::filesystem::path& dir, const std::string& name, const Json& j);

}  // namespace vtc
