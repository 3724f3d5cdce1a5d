#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "gridtd/jobs.hpp"

using namespace gridtd;

namespace {

// restores the previous GRIDTD_THREADS value when the scope ends
struct EnvGuard {
    std::string saved;
    bool had = false;
    EnvGuard() {
        if (const char* v = std::getenv("GRIDTD_THREADS")) {
            saved = v;
            had = true;
        }
    }
    ~EnvGuard() {
        if (had)
            setenv("GRIDTD_THREADS", saved.c_str(), 1);
        else
            unsetenv("GRIDTD_THREADS");
    }
};

}  // namespace

TEST(WorkerThreadCount, EnvVariableWins) {
    EnvGuard guard;
    setenv("GRIDTD_THREADS", "3", 1);
    EXPECT_EQ(worker_thread_count(), 3u);
    setenv("GRIDTD_THREADS", "1", 1);
    EXPECT_EQ(worker_thread_count(), 1u);
}

TEST(WorkerThreadCount, RejectsBadValues) {
    EnvGuard guard;
    for (const char* bad : {"0", "-2", "abc", "4x", ""}) {
        setenv("GRIDTD_THREADS", bad, 1);
        EXPECT_THROW(worker_thread_count(), std::invalid_argument) << bad;
    }
}

TEST(WorkerThreadCount, DefaultsToHardware) {
    EnvGuard guard;
    unsetenv("GRIDTD_THREADS");
    EXPECT_GE(worker_thread_count(), 1u);
}

TEST(RunJobs, EveryIndexExactlyOnce) {
    for (const std::size_t threads : {1u, 2u, 5u, 16u}) {
        std::vector<std::atomic<int>> hits(37);
        run_jobs(37, threads, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) EXPECT_EQ(h.load(), 1) << threads;
    }
}

TEST(RunJobs, ResultsIndependentOfThreadCount) {
    std::vector<double> serial(50), parallel(50);
    const auto job = [](std::size_t i) { return double(i) * 1.5 + 2.0; };
    run_jobs(50, 1, [&](std::size_t i) { serial[i] = job(i); });
    run_jobs(50, 7, [&](std::size_t i) { parallel[i] = job(i); });
    EXPECT_EQ(serial, parallel);
}

TEST(RunJobs, ZeroCountIsNoop) {
    bool touched = false;
    run_jobs(0, 4, [&](std::size_t) { touched = true; });
    EXPECT_FALSE(touched);
}

TEST(RunJobs, ZeroThreadsRejected) {
    EXPECT_THROW(run_jobs(3, 0, [](std::size_t) {}), std::invalid_argument);
}

TEST(RunJobs, FirstExceptionPropagates) {
    // serial path
    EXPECT_THROW(run_jobs(4, 1,
                          [](std::size_t i) {
                              if (i == 2) throw std::runtime_error("boom");
                          }),
                 std::runtime_error);
    // threaded path: all workers stop, error reaches the caller
    std::atomic<int> completed{0};
    try {
        run_jobs(64, 4, [&](std::size_t i) {
            if (i % 5 == 1) throw std::runtime_error("job failed");
            ++completed;
        });
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "job failed");
    }
    EXPECT_LE(completed.load(), 64);
}

TEST(RunJobs, DefaultOverloadUsesEnvCap) {
    EnvGuard guard;
    setenv("GRIDTD_THREADS", "2", 1);
    std::vector<int> out(10, 0);
    run_jobs(10, [&](std::size_t i) { out[i] = int(i); });
    for (int i = 0; i < 10; ++i) EXPECT_EQ(out[i], i);
    setenv("GRIDTD_THREADS", "bogus", 1);
    EXPECT_THROW(run_jobs(10, [&](std::size_t) {}), std::invalid_argument);
}
