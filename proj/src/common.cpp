#include "qmcgp/common.hpp"

#include <condition_variable>
#include <mutex>
#include <thread>

namespace qmcgp {

namespace {

// One persistent helper thread handling half of each large range; the
// caller thread runs the other half. Spawning threads per call costs more
// than the work saved at these sizes, so the worker stays alive.
class HalfWorker {
 public:
  HalfWorker() : thread_([this] { run(); }) {}

  ~HalfWorker() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_work_.notify_all();
    thread_.join();
  }

  void execute(const std::function<void(size_t, size_t, size_t)>& fn, size_t mid, size_t n) {
    size_t my_gen;
    {
      std::lock_guard<std::mutex> lk(mu_);
      job_ = &fn;
      begin_ = mid;
      end_ = n;
      my_gen = ++gen_;
    }
    cv_work_.notify_one();
    fn(0, 0, mid);
    std::unique_lock<std::mutex> lk(mu_);
    cv_done_.wait(lk, [&] { return done_gen_ >= my_gen; });
  }

 private:
  void run() {
    size_t seen = 0;
    std::unique_lock<std::mutex> lk(mu_);
    while (true) {
      cv_work_.wait(lk, [&] { return stop_ || gen_ != seen; });
      if (stop_) return;
      seen = gen_;
      const auto* job = job_;
      size_t b = begin_, e = end_;
      lk.unlock();
      (*job)(1, b, e);
      lk.lock();
      done_gen_ = seen;
      cv_done_.notify_all();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_work_, cv_done_;
  const std::function<void(size_t, size_t, size_t)>* job_ = nullptr;
  size_t begin_ = 0, end_ = 0;
  size_t gen_ = 0, done_gen_ = 0;
  bool stop_ = false;
  std::thread thread_;
};

}  // namespace

void parallel_chunks(size_t n, size_t min_per_thread,
                     const std::function<void(size_t, size_t, size_t)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw < 2 || n < 2 * min_per_thread) {
    fn(0, 0, n);
    return;
  }
  static HalfWorker worker;
  worker.execute(fn, n / 2, n);
}

}  // namespace qmcgp
