#ifndef IDCV_PARALLEL_HPP
#define IDCV_PARALLEL_HPP

#include <functional>

namespace idcv {

// Process-wide cap on worker threads (the CLI's --threads flag). 0 means
// use the hardware count.
void set_thread_cap(int n);
int thread_cap();

// Runs fn(i) for i in [0,count) across up to thread_cap() threads. Every
// index must write to storage disjoint from every other index; under that
// contract the result is identical for any thread count, which is what the
// determinism guarantees of training and synthesis rest on.
void parallel_for(int count, const std::function<void(int)>& fn);

} // namespace idcv

#endif
