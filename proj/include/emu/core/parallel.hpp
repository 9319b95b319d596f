#pragma once

#include <cstddef>
#include <functional>

namespace emu {

// Worker cap from EMU_THREADS (default 1, clamped to hardware concurrency).
int worker_count();

// Runs fn(i) for i in [0, n). With more than one worker, indices are split
// into contiguous chunks; fn must be safe to call concurrently for distinct i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace emu
