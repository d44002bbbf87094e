#include "psamp/driver.hpp"

namespace psamp {

std::string driver_kind_name(DriverKind kind) {
  switch (kind) {
    case DriverKind::DestinationTable: return "destination-table";
    case DriverKind::UnitInterval: return "unit-interval";
    case DriverKind::FiniteAtom: return "finite-atom";
  }
  return "?";
}

DriverKind kind_of(const Driver& d) {
  if (std::holds_alternative<TableDriver>(d)) return DriverKind::DestinationTable;
  if (std::holds_alternative<UnitDriver>(d)) return DriverKind::UnitInterval;
  return DriverKind::FiniteAtom;
}

}  // namespace psamp
