#pragma once

// JSON files for operators, one-slot combs and (S, N) pairs.
//
// MatrixFile: {"spaces": [{"label", "dim"}...], "re": [[...]...], "im": [[...]...]}
// with row-major rows; "im" may be omitted for a real operator. Doubles are
// written in shortest round-trip form, so write-then-read is bit-exact.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "sod/construction.hpp"

namespace sod::io {

using json = nlohmann::json;

// Malformed content or unreadable/unwritable files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json operator_to_json(const LabeledOperator& op);
LabeledOperator operator_from_json(const json& j);

// MatrixFile plus "target" and "p_nominal".
json one_slot_to_json(const OneSlotComb& c);
OneSlotComb one_slot_from_json(const json& j);

struct PairFile {
  Comb s;
  Comb n;
  TargetKind target = TargetKind::inverse;
  // Scale of the success branch relative to the target (p for SDP pairs).
  double epsilon = 0.0;
};

// {"structure": {"K", "d", "d0"}, "target", "epsilon", "S": MatrixFile, "N": MatrixFile}
json pair_to_json(const PairFile& p);
PairFile pair_from_json(const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace sod::io
