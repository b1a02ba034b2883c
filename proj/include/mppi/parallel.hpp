#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mppi {

/// Fixed-size pool that runs index-range jobs to completion.
///
/// `parallel_for` splits [0, n) into contiguous chunks, one per worker, so the
/// mapping from index to result slot never depends on scheduling. With one
/// worker everything runs on the calling thread.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers = 1);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return workers_; }

  /// Calls body(worker, begin, end) over a partition of [0, n); blocks until done.
  /// The first exception thrown by any chunk is rethrown here.
  void parallel_for(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

 private:
  void worker_loop(std::size_t id);

  std::size_t workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t, std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t job_size_ = 0;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  std::exception_ptr error_;
  bool stopping_ = false;
};

}  // namespace mppi
