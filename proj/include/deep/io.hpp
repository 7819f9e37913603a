#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deep/analysis.hpp"
#include "deep/dynamics.hpp"
#include "deep/network.hpp"
#include "deep/sparsity.hpp"
#include "deep/training.hpp"

namespace deep {

class ParseError : public std::runtime_error {
 public:
  ParseError(Index line, Index column, const std::string& what)
      : std::runtime_error("parse error at line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  Index line() const { return line_; }
  Index column() const { return column_; }

 private:
  Index line_;
  Index column_;
};

/// Shortest decimal form that round-trips a double (up to 17 significant digits).
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_real(float v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Network text format:
//   DEEP v1 N=<n> P=<p> roles=<IHO per neuron>
//   N rows of N weight tokens (row i = outgoing weights of neuron i, absent
//   connections written as "."), then one row of N bias tokens.
// ---------------------------------------------------------------------------

template <typename Scalar>
void save_network(std::ostream& os, const Network<Scalar>& net) {
  os << "DEEP v1 N=" << net.n_total << " P=" << net.n_input << " roles=";
  for (Index j = 0; j < net.n_total; ++j) os << role_char(net.role(j));
  os << '\n';
  for (Index i = 0; i < net.n_total; ++i) {
    for (Index j = 0; j < net.n_total; ++j) {
      if (j > 0) os << ' ';
      if (net.mask(i, j))
        os << format_real(net.weights(i, j));
      else
        os << '.';
    }
    os << '\n';
  }
  for (Index j = 0; j < net.n_total; ++j) {
    if (j > 0) os << ' ';
    if (net.bias_mask(j))
      os << format_real(net.bias(j));
    else
      os << '.';
  }
  os << '\n';
}

template <typename Scalar>
void save_network(const std::filesystem::path& path, const Network<Scalar>& net) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  save_network(os, net);
}

namespace detail {

struct Token {
  std::string text;
  Index column;  // 1-based start column
};

inline std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    tokens.push_back({line.substr(start, i - start), static_cast<Index>(start) + 1});
  }
  return tokens;
}

template <typename Scalar>
Scalar parse_value(const Token& tok, Index line_no) {
  std::size_t consumed = 0;
  double value = 0;
  try {
    value = std::stod(tok.text, &consumed);
  } catch (const std::exception&) {
    throw ParseError(line_no, tok.column, "expected a number or '.', got '" + tok.text + "'");
  }
  if (consumed != tok.text.size())
    throw ParseError(line_no, tok.column, "trailing characters in number '" + tok.text + "'");
  return static_cast<Scalar>(value);
}

}  // namespace detail

template <typename Scalar = double>
Network<Scalar> load_network(std::istream& is) {
  std::string line;
  Index line_no = 0;
  auto next_line = [&]() {
    while (std::getline(is, line)) {
      ++line_no;
      if (!detail::tokenize(line).empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError(1, 1, "empty network file");
  auto header = detail::tokenize(line);
  if (header.size() != 5 || header[0].text != "DEEP" || header[1].text != "v1")
    throw ParseError(line_no, 1, "expected header 'DEEP v1 N=<n> P=<p> roles=<...>'");
  auto field = [&](std::size_t k, const std::string& prefix) -> std::string {
    if (header[k].text.rfind(prefix, 0) != 0)
      throw ParseError(line_no, header[k].column, "expected '" + prefix + "...'");
    return header[k].text.substr(prefix.size());
  };
  Index n = 0, p = 0;
  try {
    n = static_cast<Index>(std::stoll(field(2, "N=")));
    p = static_cast<Index>(std::stoll(field(3, "P=")));
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError(line_no, header[2].column, "N= and P= must be integers");
  }
  const std::string roles = field(4, "roles=");
  if (static_cast<Index>(roles.size()) != n)
    throw ParseError(line_no, header[4].column, "roles string must have exactly N characters");
  if (n < 1 || p < 0 || p > n) throw ParseError(line_no, header[2].column, "invalid N/P");

  Network<Scalar> net;
  net.n_total = n;
  net.n_input = p;
  net.roles.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    switch (roles[static_cast<std::size_t>(j)]) {
      case 'I': net.roles[static_cast<std::size_t>(j)] = NeuronRole::Input; break;
      case 'H': net.roles[static_cast<std::size_t>(j)] = NeuronRole::Hidden; break;
      case 'O': net.roles[static_cast<std::size_t>(j)] = NeuronRole::Output; break;
      default:
        throw ParseError(line_no, header[4].column + 6 + j, "role characters must be I, H or O");
    }
  }

  net.weights = MatrixX<Scalar>::Zero(n, n);
  net.bias = VectorX<Scalar>::Zero(n);
  net.mask = MaskMatrix::Constant(n, n, false);
  net.bias_mask = MaskVector::Constant(n, false);

  for (Index i = 0; i < n; ++i) {
    if (!next_line()) throw ParseError(line_no + 1, 1, "unexpected end of file in weight rows");
    auto tokens = detail::tokenize(line);
    if (static_cast<Index>(tokens.size()) != n)
      throw ParseError(line_no, 1,
                       "weight row " + std::to_string(i) + " has " + std::to_string(tokens.size()) +
                           " entries, expected " + std::to_string(n));
    for (Index j = 0; j < n; ++j) {
      const auto& tok = tokens[static_cast<std::size_t>(j)];
      if (tok.text == ".") continue;
      if (i == j) throw ParseError(line_no, tok.column, "self-connections must be absent ('.')");
      net.mask(i, j) = true;
      net.weights(i, j) = detail::parse_value<Scalar>(tok, line_no);
    }
  }

  if (!next_line()) throw ParseError(line_no + 1, 1, "unexpected end of file before bias row");
  auto tokens = detail::tokenize(line);
  if (static_cast<Index>(tokens.size()) != n)
    throw ParseError(line_no, 1, "bias row has " + std::to_string(tokens.size()) +
                                     " entries, expected " + std::to_string(n));
  for (Index j = 0; j < n; ++j) {
    const auto& tok = tokens[static_cast<std::size_t>(j)];
    if (tok.text == ".") continue;
    if (net.is_input(j))
      throw ParseError(line_no, tok.column, "input neurons carry no bias (use '.')");
    net.bias_mask(j) = true;
    net.bias(j) = detail::parse_value<Scalar>(tok, line_no);
  }

  try {
    validate_network(net);
  } catch (const std::exception& e) {
    throw ParseError(1, 1, e.what());
  }
  // Sparsity is reported against the fresh complete construction for this shape.
  const Index non_input = n - p;
  net.initial_params = non_input * (n - 1) + non_input;
  return net;
}

template <typename Scalar = double>
Network<Scalar> load_network(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open network file: " + path.string());
  return load_network<Scalar>(is);
}

// ---------------------------------------------------------------------------
// CSV emitters. Schemas are fixed; values print in round-trip precision.
// ---------------------------------------------------------------------------

template <typename Scalar>
void write_metrics_csv(std::ostream& os, const std::vector<RunRecord<Scalar>>& records) {
  os << "epoch,run_seed,mse,sparsity\n";
  for (const auto& rec : records)
    for (std::size_t e = 0; e < rec.mse.size(); ++e)
      os << (e + 1) << ',' << rec.seed << ',' << format_real(rec.mse[e]) << ','
         << format_real(rec.sparsity[e]) << '\n';
}

template <typename Scalar>
void write_aggregate_csv(std::ostream& os, const std::vector<EpochStats<Scalar>>& aggregate) {
  os << "epoch,min,q25,median,q75,max\n";
  for (std::size_t e = 0; e < aggregate.size(); ++e) {
    const auto& st = aggregate[e];
    os << (e + 1) << ',' << format_real(st.min) << ',' << format_real(st.q25) << ','
       << format_real(st.median) << ',' << format_real(st.q75) << ',' << format_real(st.max)
       << '\n';
  }
}

template <typename Scalar>
void write_prune_log_csv(std::ostream& os, const std::vector<PruneEvent<Scalar>>& events) {
  os << "epoch,example_index,source,target,weight_value,probability\n";
  for (const auto& ev : events) {
    os << ev.epoch << ',' << ev.example_index << ',';
    if (ev.source == kBiasSource)
      os << "bias";
    else
      os << ev.source;
    os << ',' << ev.target << ',' << format_real(ev.weight_value) << ','
       << format_real(ev.probability) << '\n';
  }
}

template <typename Scalar>
void write_trajectory_csv(std::ostream& os, const PhaseTrajectory<Scalar>& traj) {
  const Index n = traj.states.empty() ? 0 : traj.states.front().size();
  os << "step";
  for (Index j = 0; j < n; ++j) os << ",neuron_" << j;
  os << '\n';
  for (std::size_t m = 0; m < traj.states.size(); ++m) {
    os << m;
    for (Index j = 0; j < n; ++j) os << ',' << format_real(traj.states[m](j));
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// DOT export: one node per neuron (shape coded by role), one edge per present
// weight, biases drawn from a distinguished always-one node. Edge opacity is
// |W| normalized by the largest |W| present, as an alpha byte in the color.
// ---------------------------------------------------------------------------

template <typename Scalar>
void export_dot(std::ostream& os, const Network<Scalar>& net) {
  Scalar max_abs = 0;
  for (Index i = 0; i < net.n_total; ++i)
    for (Index j = 0; j < net.n_total; ++j)
      if (net.mask(i, j)) max_abs = std::max(max_abs, std::abs(net.weights(i, j)));
  for (Index j = 0; j < net.n_total; ++j)
    if (net.bias_mask(j)) max_abs = std::max(max_abs, std::abs(net.bias(j)));

  auto alpha = [&](Scalar w) -> int {
    if (max_abs == Scalar(0)) return 26;  // 10% floor so an all-zero net stays visible
    return static_cast<int>(std::lround(255.0 * static_cast<double>(std::abs(w) / max_abs)));
  };
  auto edge = [&](const std::string& from, Index to, Scalar w) {
    char color[16];
    std::snprintf(color, sizeof(color), "#000000%02x", alpha(w));
    os << "  " << from << " -> n" << to << " [color=\"" << color << "\"];\n";
  };

  os << "digraph deep {\n";
  os << "  rankdir=LR;\n";
  bool any_bias = false;
  for (Index j = 0; j < net.n_total; ++j) any_bias = any_bias || net.bias_mask(j);
  if (any_bias) os << "  bias [label=\"1\", shape=diamond];\n";
  for (Index j = 0; j < net.n_total; ++j) {
    const char* shape = "circle";
    if (net.role(j) == NeuronRole::Input) shape = "box";
    if (net.role(j) == NeuronRole::Output) shape = "doublecircle";
    os << "  n" << j << " [label=\"" << j << "\", shape=" << shape << "];\n";
  }
  for (Index i = 0; i < net.n_total; ++i)
    for (Index j = 0; j < net.n_total; ++j)
      if (net.mask(i, j)) edge("n" + std::to_string(i), j, net.weights(i, j));
  for (Index j = 0; j < net.n_total; ++j)
    if (net.bias_mask(j)) edge("bias", j, net.bias(j));
  os << "}\n";
}

// ---------------------------------------------------------------------------
// Stability report rendering.
// ---------------------------------------------------------------------------

template <typename Scalar>
void print_stability_report(std::ostream& os, const Network<Scalar>& net,
                            const StabilityReport<Scalar>& report) {
  os << "neuron  role  outgoing_sum        incoming_abs_sum    condition\n";
  char buf[96];
  for (const auto& row : report.neurons) {
    std::snprintf(buf, sizeof(buf), "%6lld  %4c  %-18.10g  %-18.10g  %s\n",
                  static_cast<long long>(row.neuron), role_char(net.role(row.neuron)),
                  static_cast<double>(row.outgoing_sum), static_cast<double>(row.incoming_abs_sum),
                  row.condition_met ? "met" : "not met");
    os << buf;
  }
  if (report.overall_certified)
    os << "CERTIFIED: locally asymptotically stable (sufficient conditions met)\n";
  else
    os << "NOT CERTIFIED (conditions are sufficient, not necessary)\n";
}

template <typename Scalar>
void write_stability_csv(std::ostream& os, const StabilityReport<Scalar>& report) {
  os << "neuron,outgoing_sum,incoming_abs_sum,condition_met\n";
  for (const auto& row : report.neurons)
    os << row.neuron << ',' << format_real(row.outgoing_sum) << ','
       << format_real(row.incoming_abs_sum) << ',' << (row.condition_met ? 1 : 0) << '\n';
}

}  // namespace deep
