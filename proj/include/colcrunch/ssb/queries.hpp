#pragma once

#include <array>
#include <string_view>

#include "colcrunch/exec/plan.hpp"

namespace colcrunch::ssb {

inline constexpr std::array<std::string_view, 13> kQueryIds = {
    "Q1.1", "Q1.2", "Q1.3", "Q2.1", "Q2.2", "Q2.3", "Q3.1",
    "Q3.2", "Q3.3", "Q3.4", "Q4.1", "Q4.2", "Q4.3"};

/// The plan for one of kQueryIds, with prefetch columns declared. LINEORDER
/// is always the probe side; dimensions are hash-join build sides.
/// Throws NotFoundError for an unknown id.
exec::PlanNode build_query(std::string_view query_id);

}  // namespace colcrunch::ssb
