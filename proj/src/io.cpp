#include "mlpsel/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mlpsel::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ConfigError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ConfigError("failed to move output into place at '" + path.string() + "'");
  }
}

void require_keys(const json& j, const std::string& context,
                  const std::vector<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(context + ": unknown key '" + it.key() + "'");
  }
}

json params_to_json(const MlpParams& theta, Transfer transfer) {
  theta.validate();
  json j;
  j["k"] = theta.k();
  j["d"] = theta.d();
  j["transfer"] = TransferFunction(transfer).name();
  j["flat_theta"] = theta.to_flat();
  return j;
}

std::pair<MlpParams, Transfer> params_from_json(const json& j) {
  // Extra keys are tolerated: fit results are parameter files plus metadata
  // and must load back as plain networks.
  if (!j.is_object()) throw ConfigError("parameter file: expected an object");
  for (const char* key : {"k", "d", "transfer", "flat_theta"})
    if (!j.contains(key)) throw ConfigError(std::string("parameter file: missing key '") + key + "'");
  const int k = j.at("k").get<int>();
  const int d = j.at("d").get<int>();
  const auto flat = j.at("flat_theta").get<std::vector<double>>();
  const Transfer transfer = TransferFunction::parse(j.at("transfer").get<std::string>()).kind();
  try {
    return {MlpParams::from_flat(flat, k, d), transfer};
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("parameter file: ") + e.what());
  }
}

void write_params(const fs::path& path, const MlpParams& theta, Transfer transfer) {
  atomic_write_file(path, params_to_json(theta, transfer).dump(2) + "\n");
}

std::pair<MlpParams, Transfer> read_params(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open parameter file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("parameter file '" + path.string() + "': " + e.what());
  }
  return params_from_json(j);
}

void write_dataset_csv(const fs::path& path, const Dataset& data) {
  std::string out;
  for (int j = 0; j < data.d(); ++j) out += "x" + std::to_string(j + 1) + ",";
  out += "y\n";
  for (std::int64_t t = 0; t < data.n(); ++t) {
    const auto x = data.x(t);
    for (double v : x) {
      out += fmt(v);
      out += ',';
    }
    out += fmt(data.y(t));
    out += '\n';
  }
  atomic_write_file(path, out);
}

Dataset read_dataset_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file '" + path.string() + "'");
  std::string line;
  int d = -1;
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!header_seen) {
      if (fields.size() < 2)
        throw ConfigError("dataset '" + path.string() + "': header needs x columns and y");
      d = static_cast<int>(fields.size()) - 1;
      header_seen = true;
      continue;
    }
    if (static_cast<int>(fields.size()) != d + 1)
      throw ConfigError("dataset '" + path.string() + "' line " + std::to_string(lineno) +
                        ": expected " + std::to_string(d + 1) + " fields");
    std::vector<double> row(static_cast<std::size_t>(d));
    try {
      for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = std::stod(fields[static_cast<std::size_t>(j)]);
      ys.push_back(std::stod(fields.back()));
    } catch (const std::exception&) {
      throw ConfigError("dataset '" + path.string() + "' line " + std::to_string(lineno) +
                        ": non-numeric field");
    }
    xs.push_back(std::move(row));
  }
  if (!header_seen) throw ConfigError("dataset '" + path.string() + "': missing header row");
  if (xs.empty()) throw ConfigError("dataset '" + path.string() + "': no observations");
  return Dataset::from_rows(xs, ys);
}

namespace {

std::string header_block(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += "# " + l + "\n";
  return out;
}

}  // namespace

std::string selection_csv(const SelectionResult& sel, const std::vector<std::string>& header_lines) {
  std::string out = header_block(header_lines);
  out += "k,loglik,penalty,T_n\n";
  for (const auto& row : sel.per_k)
    out += std::to_string(row.k) + "," + fmt(row.loglik) + "," + fmt(row.penalty) + "," +
           fmt(row.t_n) + "\n";
  out += "# k_hat," + std::to_string(sel.k_hat) + "\n";
  return out;
}

json selection_json(const SelectionResult& sel, Transfer transfer) {
  json rows = json::array();
  for (const auto& row : sel.per_k)
    rows.push_back({{"k", row.k}, {"loglik", row.loglik}, {"penalty", row.penalty}, {"T_n", row.t_n}});
  json fits = json::array();
  for (const auto& fit : sel.fits) {
    json f = params_to_json(fit.theta_hat, transfer);
    f["loglik"] = fit.loglik;
    f["rss"] = fit.rss;
    f["converged_restarts"] = fit.converged_restarts;
    f["best_restart_index"] = fit.best_restart_index;
    fits.push_back(std::move(f));
  }
  return json{{"per_k", rows},
              {"k_hat", sel.k_hat},
              {"tn_increasing_at_max", sel.tn_increasing_at_max},
              {"warnings", sel.warnings},
              {"fits", fits}};
}

std::string consistency_csv(const ConsistencyTable& table,
                            const std::vector<std::string>& header_lines) {
  std::string out = header_block(header_lines);
  out += "n,statistic,value\n";
  for (const auto& row : table.per_n) {
    const std::string n = std::to_string(row.n);
    std::int64_t valid = 0;
    for (auto c : row.k_hat_counts) valid += c;
    const double denom = valid > 0 ? static_cast<double>(valid) : 1.0;
    for (std::size_t k = 0; k < row.k_hat_counts.size(); ++k)
      out += n + ",freq_k" + std::to_string(k + 1) + "," +
             fmt(static_cast<double>(row.k_hat_counts[k]) / denom) + "\n";
    out += n + ",freq_true," + fmt(row.freq_true) + "\n";
    out += n + ",failures," + std::to_string(row.failures) + "\n";
    out += n + ",invalid," + std::string(row.invalid ? "1" : "0") + "\n";
  }
  return out;
}

json consistency_json(const ConsistencyTable& table) {
  json rows = json::array();
  for (const auto& row : table.per_n) {
    json counts = json::array();
    for (auto c : row.k_hat_counts) counts.push_back(c);
    rows.push_back({{"n", row.n},
                    {"k_hat_counts", counts},
                    {"freq_true", row.freq_true},
                    {"failures", row.failures},
                    {"invalid", row.invalid}});
  }
  return json{{"k0", table.k0}, {"per_n", rows}};
}

std::string consistency_raw_csv(const ConsistencyTable& table,
                                const std::vector<std::string>& header_lines) {
  std::string out = header_block(header_lines);
  out += "n,rep,seed,k_hat,failed\n";
  for (const auto& cell : table.cells)
    out += std::to_string(cell.n) + "," + std::to_string(cell.rep) + "," +
           std::to_string(cell.seed) + "," + std::to_string(cell.k_hat) + "," +
           (cell.failed ? "1" : "0") + "\n";
  return out;
}

std::string lrs_csv(const LrsTable& table, const std::vector<std::string>& header_lines) {
  std::string out = header_block(header_lines);
  out += "condition,n,statistic,value\n";
  for (const auto& row : table.per_n) {
    const std::string pre = std::string(condition_name(row.condition)) + "," + std::to_string(row.n) + ",";
    out += pre + "median," + fmt(row.median) + "\n";
    out += pre + "q90," + fmt(row.q90) + "\n";
    out += pre + "min_raw," + fmt(row.min_raw) + "\n";
    out += pre + "clamped," + std::to_string(row.clamped) + "\n";
    out += pre + "failures," + std::to_string(row.failures) + "\n";
    out += pre + "invalid," + std::string(row.invalid ? "1" : "0") + "\n";
  }
  return out;
}

json lrs_json(const LrsTable& table) {
  json rows = json::array();
  for (const auto& row : table.per_n)
    rows.push_back({{"condition", condition_name(row.condition)},
                    {"n", row.n},
                    {"median", row.median},
                    {"q90", row.q90},
                    {"min_raw", row.min_raw},
                    {"clamped", row.clamped},
                    {"failures", row.failures},
                    {"invalid", row.invalid}});
  return json{{"k0", table.k0}, {"k_over", table.k_over}, {"per_n", rows}};
}

std::string gram_csv(const GramReport& rep, const std::vector<std::string>& header_lines) {
  std::string out = header_block(header_lines);
  out += "# min_eigenvalue," + fmt(rep.min_eigenvalue) + "\n";
  out += "# min_eig_se," + fmt(rep.min_eig_se) + "\n";
  out += "# function_count," + std::to_string(rep.function_count) + "\n";
  out += "# mc_samples," + std::to_string(rep.mc_samples) + "\n";
  for (int i = 0; i < rep.matrix.rows(); ++i) {
    for (int j = 0; j < rep.matrix.cols(); ++j) {
      if (j) out += ',';
      out += fmt(rep.matrix(i, j));
    }
    out += '\n';
  }
  return out;
}

json gram_json(const GramReport& rep) {
  json m = json::array();
  for (int i = 0; i < rep.matrix.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < rep.matrix.cols(); ++j) row.push_back(rep.matrix(i, j));
    m.push_back(std::move(row));
  }
  return json{{"matrix", m},
              {"min_eigenvalue", rep.min_eigenvalue},
              {"min_eig_se", rep.min_eig_se},
              {"function_count", rep.function_count},
              {"mc_samples", rep.mc_samples},
              {"seed", rep.seed}};
}

std::string h4_csv(const H4Report& rep, const std::vector<std::string>& header_lines) {
  std::string out = header_block(header_lines);
  out += "condition,pass,counterexample\n";
  out += std::string("increasing_in_k,") + (rep.increasing_in_k ? "1" : "0") + ",\"" +
         rep.counterexample_i + "\"\n";
  out += std::string("gaps_increasing,") + (rep.gaps_increasing ? "1" : "0") + ",\"" +
         rep.counterexample_ii + "\"\n";
  out += std::string("ratio_decreasing,") + (rep.ratio_decreasing ? "1" : "0") + ",\"" +
         rep.counterexample_iii + "\"\n";
  return out;
}

std::string expand_csv(const std::vector<ExpandRow>& rows,
                       const std::vector<std::string>& header_lines) {
  std::string out = header_block(header_lines);
  out += "path,h,D,remainder,remainder_over_D\n";
  for (const auto& r : rows)
    out += std::to_string(r.path) + "," + fmt(r.h) + "," + fmt(r.D) + "," + fmt(r.remainder) +
           "," + fmt(r.remainder_over_D) + "\n";
  return out;
}

}  // namespace mlpsel::io
