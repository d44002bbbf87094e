#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "psamp/state_space.hpp"

namespace psamp {

// One full destination table: dest[x] is where x moves.
struct TableDriver {
  std::vector<State> dest;
  bool operator==(const TableDriver&) const = default;
};

// A point of the unit interval, consumed by inverse-CDF rules.
struct UnitDriver {
  double u = 0.0;
  bool operator==(const UnitDriver&) const = default;
};

// Index into a finite atom set.
struct AtomDriver {
  std::int32_t index = 0;
  bool operator==(const AtomDriver&) const = default;
};

using Driver = std::variant<TableDriver, UnitDriver, AtomDriver>;

enum class DriverKind { DestinationTable, UnitInterval, FiniteAtom };

std::string driver_kind_name(DriverKind kind);
DriverKind kind_of(const Driver& d);

}  // namespace psamp
