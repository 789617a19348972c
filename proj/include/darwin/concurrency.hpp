#pragma once

#include <cstddef>
#include <functional>

namespace darwin {

// Worker count resolution: the DARWIN_WORKERS environment variable wins when
// set; otherwise `requested` (0 = hardware concurrency, clamped to [1,64]).
unsigned resolve_workers(unsigned requested);

// Runs body(i) for i in [0, count) on `workers` threads. Work items must
// write only to their own output slots; callers reduce the slots in index
// order afterwards, so results do not depend on the schedule.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace darwin
