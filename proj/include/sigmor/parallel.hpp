#ifndef SIGMOR_PARALLEL_HPP
#define SIGMOR_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace sigmor
{

///
/// Run body(i) for i in [begin, end) on `threads` workers. Work items are
/// handed out in index order; results must be written to per-index slots.
/// The first exception (by index) is rethrown after all workers stop.
///
template <typename Body>
void parallel_for(Eigen::Index begin, Eigen::Index end, int threads, Body&& body)
{
    if (end <= begin)
        return;
    if (threads <= 1 || end - begin == 1)
    {
        for (Eigen::Index i = begin; i < end; ++i)
            body(i);
        return;
    }
    std::atomic<Eigen::Index> next{begin};
    std::mutex error_lock;
    std::exception_ptr error;
    Eigen::Index error_index = end;
    const auto worker = [&]() {
        for (;;)
        {
            const Eigen::Index i = next.fetch_add(1);
            if (i >= end)
                return;
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> guard(error_lock);
                if (i < error_index)
                {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };
    const int count = static_cast<int>(std::min<Eigen::Index>(threads, end - begin));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace sigmor

#endif
