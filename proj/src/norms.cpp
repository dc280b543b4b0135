#include "tef/norms.hpp"

namespace tef {

NormKind parse_norm_kind(std::string_view name) {
    if (name == "max") return NormKind::Max;
    if (name == "frobenius") return NormKind::Frobenius;
    if (name == "nuclear") return NormKind::Nuclear;
    if (name == "entrywise_l1" || name == "l1") return NormKind::EntrywiseL1;
    throw ConfigError("unknown norm kind '" + std::string(name) + "'");
}

std::string to_string(NormKind kind) {
    switch (kind) {
        case NormKind::Max: return "max";
        case NormKind::Frobenius: return "frobenius";
        case NormKind::Nuclear: return "nuclear";
        case NormKind::EntrywiseL1: return "entrywise_l1";
    }
    return "?";
}

}  // namespace tef
