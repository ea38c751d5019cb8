#include "vtc/report_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "vtc/errors.hpp"

namespace vtc {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) text_ += ',';
    text_ += header[c];
  }
  text_ += '\n';
}

CsvTable& CsvTable::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw ContractError("CSV row width does not match the header");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (c) text_ += ',';
    text_ += cells[c];
  }
  text_ += '\n';
  ++rows_;
  return *this;
}

CsvTable& CsvTable::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double x : cells) s.push_back(format_double(x));
  return row(s);
}

std::string CsvTable::str() const { return text_; }

CsvTable mean_curve_csv(const MeanCurve& mean) {
  CsvTable t({"t", "m", "se"});
  for (std::size_t i = 0; i < mean.values.size(); ++i) t.row({mean.grid.t(i), mean.values[i], mean.se[i]});
  return t;
}

CsvTable rate_curve_csv(const RateCurve& rate) {
  CsvTable t({"t", "h", "se"});
  for (std::size_t i = 0; i < rate.right.size(); ++i) t.row({rate.grid.t(i), rate.right[i], rate.se_right[i]});
  return t;
}

CsvTable hbar_curve_csv(const HbarCurve& hbar) {
  CsvTable t({"t", "hbar", "se"});
  for (std::size_t i = 0; i < hbar.right.size(); ++i) t.row({hbar.grid.t(i), hbar.right[i], hbar.se_right[i]});
  return t;
}

CsvTable quotient_csv(const std::vector<QuotientRow>& rows) {
  CsvTable t({"rho", "quotient"});
  for (const QuotientRow& r : rows) t.row({r.rho, r.quotient});
  return t;
}

CsvTable cost_quotient_csv(const std::vector<CostQuotientRow>& rows) {
  CsvTable t({"rho", "quotient"});
  for (const CostQuotientRow& r : rows) t.row({r.rho, r.quotient});
  return t;
}

CsvTable cost_components_csv(const CostVariationResult& r) {
  CsvTable t({"component", "value"});
  t.row({std::string("penalty_psi"), format_double(r.penalty_psi)});
  t.row({std::string("penalty_f"), format_double(r.penalty_f)});
  t.row({std::string("terminal"), format_double(r.terminal)});
  t.row({std::string("running"), format_double(r.running)});
  t.row({std::string("total"), format_double(r.total)});
  return t;
}

CsvTable adjoint_csv(const AdjointPath& adj) {
  const int m = adj.state_dim();
  const int d = adj.noise_dim();
  if (adj.mode() == AdjointMode::deterministic) {
    std::vector<std::string> header{"t"};
    for (int a = 1; a <= m; ++a) header.push_back("p_" + std::to_string(a));
    for (int a = 1; a <= m; ++a) {
      for (int j = 1; j <= d; ++j) header.push_back("q_" + std::to_string(a) + std::to_string(j));
    }
    CsvTable t(header);
    for (std::size_t j = 0; j < adj.points(); ++j) {
      std::vector<double> row{adj.time(j)};
      const Vec p = adj.p(0, j);
      const Mat q = adj.q(0, j);
      for (int a = 0; a < m; ++a) row.push_back(p[a]);
      for (int a = 0; a < m; ++a) {
        for (int l = 0; l < d; ++l) row.push_back(q(a, l));
      }
      t.row(row);
    }
    return t;
  }
  std::vector<std::string> header{"t", "basis"};
  for (int a = 1; a <= m; ++a) header.push_back("p_" + std::to_string(a));
  for (int a = 1; a <= m; ++a) {
    for (int j = 1; j <= d; ++j) header.push_back("q_" + std::to_string(a) + std::to_string(j));
  }
  CsvTable t(header);
  const auto& fits = adj.fits();
  for (std::size_t j = 0; j < fits.size(); ++j) {
    const AdjointPath::Fit& f = fits[j];
    for (Eigen::Index b = 0; b < f.p_coef.rows(); ++b) {
      std::vector<double> row{adj.time(j), static_cast<double>(b)};
      for (int a = 0; a < m; ++a) row.push_back(f.p_coef(b, a));
      for (int c = 0; c < m * d; ++c) row.push_back(f.q_coef.rows() > b ? f.q_coef(b, c) : 0.0);
      t.row(row);
    }
  }
  return t;
}

CsvTable probe_csv(const BranchReport& branch) {
  const int k = branch.probes.empty() ? 1 : static_cast<int>(branch.probes.front().u.size());
  std::vector<std::string> header{"t"};
  if (k == 1) {
    header.push_back("u");
  } else {
    for (int c = 1; c <= k; ++c) header.push_back("u_" + std::to_string(c));
  }
  header.push_back("lhs");
  CsvTable t(header);
  for (const ProbeRow& r : branch.probes) {
    std::vector<double> row{r.t};
    for (int c = 0; c < k; ++c) row.push_back(r.u[c]);
    row.push_back(r.lhs);
    t.row(row);
  }
  return t;
}

CsvTable trace_csv(const OptimizerTrace& trace) {
  CsvTable t({"iter", "J", "tau", "case", "violation", "step"});
  for (const IterateRecord& r : trace.iterates) {
    t.row({std::to_string(r.iter), format_double(r.J), format_double(r.tau), case_label(r.case_tag),
           format_double(r.violation), format_double(r.step)});
  }
  return t;
}

CsvTable control_csv(const PiecewiseConstant& control) {
  std::vector<std::string> header{"t"};
  for (int c = 1; c <= control.dim(); ++c) header.push_back("u_" + std::to_string(c));
  CsvTable t(header);
  for (std::size_t i = 0; i < control.cells(); ++i) {
    std::vector<double> row{control.grid().t(i)};
    const Vec u = control.at(i);
    for (int c = 0; c < control.dim(); ++c) row.push_back(u[c]);
    t.row(row);
  }
  return t;
}

namespace {

Json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

}  // namespace

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Json to_json(const Estimate& e) { return Json{{"value", num(e.value)}, {"se", num(e.se)}}; }

Json to_json(const TerminalTimeResult& t) {
  Json j;
  j["tau"] = num(t.tau);
  j["case"] = case_label(t.case_tag);
  j["crossing_index"] = t.crossing_index ? Json(*t.crossing_index) : Json(nullptr);
  j["h_at_tau"] = num(t.h_at_tau);
  j["h_at_tau_se"] = num(t.h_at_tau_se);
  j["h_max"] = num(t.h_max);
  j["degenerate_h"] = t.degenerate_h;
  j["h_discontinuous"] = t.h_discontinuous;
  j["jump"] = num(t.jump);
  j["jump_threshold"] = num(t.jump_threshold);
  j["alpha_gap"] = num(t.alpha_gap);
  return j;
}

Json to_json(const PenaltyTerms& p) {
  return Json{{"psi_tilde", num(p.psi_tilde)},
              {"f_at_tau", num(p.f_at_tau)},
              {"h_at_tau", num(p.h_at_tau)},
              {"kappa", num(p.kappa)}};
}

Json to_json(const SmpReport& r) {
  Json j;
  j["terminal"] = to_json(r.terminal);
  j["case"] = case_label(r.terminal.case_tag);
  j["cost"] = to_json(r.cost);
  j["verdict"] = verdict_label(r.verdict);
  j["diagnosis"] = r.diagnosis;
  j["max_violation"] = num(r.max_violation());
  j["penalty"] = to_json(r.penalty);
  Json branches = Json::array();
  for (const BranchReport& b : r.branches) {
    Json bj;
    bj["with_penalty"] = b.with_penalty;
    bj["kappa"] = num(b.kappa);
    bj["max_violation"] = num(b.max_violation);
    bj["tolerance"] = num(b.tolerance);
    bj["satisfied"] = b.satisfied;
    if (!b.probes.empty()) {
      const ProbeRow& w = b.probes[b.worst];
      bj["worst_probe"] = Json{{"t", num(w.t)}, {"node", w.node}, {"u", to_json(w.u)}, {"lhs", num(w.lhs)}};
    }
    branches.push_back(bj);
  }
  j["branches"] = branches;
  if (!r.branches.empty()) {
    j["chosen_branch"] = r.chosen_branch;
    j["worst_probe"] = j["branches"][r.chosen_branch]["worst_probe"];
  }
  return j;
}

Json to_json(const TauDerivativeResult& r) {
  return Json{{"case", case_label(r.case_tag)},     {"value", num(r.value)},
              {"se", num(r.se)},                    {"ambiguous", r.ambiguous},
              {"alternative", num(r.alternative)},  {"hbar_integral", num(r.hbar_integral)},
              {"h_at_tau", num(r.h_at_tau)}};
}

Json to_json(const CostVariationResult& r) {
  Json j;
  j["case"] = case_label(r.case_tag);
  j["total"] = num(r.total);
  j["se"] = num(r.se);
  j["penalty_psi"] = num(r.penalty_psi);
  j["penalty_f"] = num(r.penalty_f);
  j["terminal"] = num(r.terminal);
  j["running"] = num(r.running);
  j["ambiguous"] = r.ambiguous;
  j["total_without_penalty"] = num(r.total_without_penalty);
  j["psi_tilde"] = num(r.psi_tilde);
  j["f_at_tau"] = num(r.f_at_tau);
  j["h_at_tau"] = num(r.h_at_tau);
  j["hbar_integral"] = num(r.hbar_integral);
  j["kappa"] = num(r.kappa);
  return j;
}

Json to_json(const DualityResult& r) {
  return Json{{"lhs", num(r.lhs)}, {"rhs", num(r.rhs)}, {"defect", num(r.defect)}, {"se", num(r.se)}};
}

Json to_json(const OptimizerResult& r) {
  Json j;
  j["termination"] = termination_label(r.trace.termination);
  j["iterations"] = r.trace.iterates.size();
  if (!r.trace.iterates.empty()) {
    const IterateRecord& last = r.trace.iterates.back();
    j["J"] = num(last.J);
    j["J_se"] = num(last.J_se);
    j["tau"] = num(last.tau);
    j["case"] = case_label(last.case_tag);
  }
  j["final_report"] = to_json(r.final_report);
  return j;
}

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::filesystem::path path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_csv(const std::filesystem::path& dir, const std::string& name, const CsvTable& table) {
  write_file(dir, name, table.str());
}

void write_json(const std::filesystem::path& dir, const std::string& name, const Json& j) {
  write_file(dir, name, j.dump(2) + "\n");
}

}  // namespace vtc
