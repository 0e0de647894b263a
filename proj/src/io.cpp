#include "sod/io.hpp"

#include <cmath>
#include <fstream>

namespace sod::io {

namespace {

json real_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long k = 0; k < m.cols(); ++k) {
      if (!std::isfinite(m(i, k))) throw FormatError("operator has a non-finite entry");
      row.push_back(m(i, k));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd read_rows(const json& rows, long n, const char* field) {
  if (!rows.is_array() || static_cast<long>(rows.size()) != n)
    throw FormatError(std::string("'") + field + "' must have one row per basis state");
  Eigen::MatrixXd m(n, n);
  for (long i = 0; i < n; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<long>(row.size()) != n)
      throw FormatError(std::string("'") + field + "' row " + std::to_string(i) + " has the wrong length");
    for (long k = 0; k < n; ++k) {
      if (!row[k].is_number()) throw FormatError(std::string("'") + field + "' holds a non-number");
      m(i, k) = row[k].get<double>();
    }
  }
  return m;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

json operator_to_json(const LabeledOperator& op) {
  json spaces = json::array();
  for (const auto& s : op.registry().spaces()) spaces.push_back({{"label", s.label}, {"dim", s.dim}});
  json out = {{"spaces", spaces}, {"re", real_rows(op.matrix().real())}};
  if (op.matrix().imag().cwiseAbs().maxCoeff() != 0.0) out["im"] = real_rows(op.matrix().imag());
  return out;
}

LabeledOperator operator_from_json(const json& j) {
  const json& spaces = field(j, "spaces");
  if (!spaces.is_array() || spaces.empty()) throw FormatError("'spaces' must be a non-empty array");
  std::vector<Space> list;
  long n = 1;
  for (const auto& s : spaces) {
    const json& label = field(s, "label");
    const json& dim = field(s, "dim");
    if (!label.is_string() || !dim.is_number_integer() || dim.get<long>() < 1)
      throw FormatError("each space needs a string label and a positive integer dim");
    list.push_back({label.get<std::string>(), dim.get<int>()});
    n *= dim.get<long>();
    if (n > 4096) throw FormatError("operator dimension exceeds 4096");
  }
  const Eigen::MatrixXd re = read_rows(field(j, "re"), n, "re");
  const Eigen::MatrixXd im = j.contains("im") ? read_rows(j.at("im"), n, "im") : Eigen::MatrixXd::Zero(n, n);
  Matrix m(n, n);
  m.real() = re;
  m.imag() = im;
  try {
    return LabeledOperator(SpaceRegistry(std::move(list)), std::move(m));
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid operator: ") + e.what());
  }
}

json one_slot_to_json(const OneSlotComb& c) {
  json out = operator_to_json(c.choi);
  out["target"] = to_string(c.target);
  out["p_nominal"] = c.p_nominal;
  return out;
}

OneSlotComb one_slot_from_json(const json& j) {
  OneSlotComb c;
  c.choi = operator_from_json(j);
  const json& target = field(j, "target");
  const json& p = field(j, "p_nominal");
  if (!target.is_string() || !p.is_number()) throw FormatError("'target' must be a string and 'p_nominal' a number");
  try {
    c.target = target_from_string(target.get<std::string>());
  } catch (const std::exception& e) {
    throw FormatError(e.what());
  }
  c.p_nominal = p.get<double>();
  for (const char* label : {"I0", "I1", "O1", "O0"})
    if (!c.choi.registry().contains(label)) throw FormatError(std::string("one-slot comb lacks space ") + label);
  if (c.choi.registry().size() != 4) throw FormatError("one-slot comb must have exactly I0, I1, O1, O0");
  return c;
}

json pair_to_json(const PairFile& p) {
  const auto& st = p.s.structure();
  return {{"structure", {{"K", st.K}, {"d", st.d}, {"d0", st.d0}}},
          {"target", to_string(p.target)},
          {"epsilon", p.epsilon},
          {"S", operator_to_json(p.s.choi())},
          {"N", operator_to_json(p.n.choi())}};
}

PairFile pair_from_json(const json& j) {
  const json& st = field(j, "structure");
  CombStructure s;
  for (const char* key : {"K", "d", "d0"})
    if (!field(st, key).is_number_integer() || st.at(key).get<int>() < 1)
      throw FormatError(std::string("structure.") + key + " must be a positive integer");
  s.K = st.at("K").get<int>();
  s.d = st.at("d").get<int>();
  s.d0 = st.at("d0").get<int>();
  PairFile out;
  const json& target = field(j, "target");
  const json& eps = field(j, "epsilon");
  if (!target.is_string() || !eps.is_number()) throw FormatError("'target' must be a string and 'epsilon' a number");
  try {
    out.target = target_from_string(target.get<std::string>());
    out.s = Comb(s, operator_from_json(field(j, "S")));
    out.n = Comb(s, operator_from_json(field(j, "N")));
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid pair: ") + e.what());
  }
  out.epsilon = eps.get<double>();
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace sod::io
