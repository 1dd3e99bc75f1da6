#include "bloch/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace bloch::fft {

namespace {

// FFTW planning is not thread-safe; new-array execution is. Plans are created
// once per (size, direction) with FFTW_UNALIGNED so they accept any buffer.
class PlanCache {
public:
    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> a(n), b(n);
        fftw_plan p = fftw_plan_dft_1d(
            n, reinterpret_cast<fftw_complex*>(a.data()),
            reinterpret_cast<fftw_complex*>(b.data()), sign,
            FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void run(const std::vector<cplx>& in, std::vector<cplx>& out, int sign) {
    const int n = static_cast<int>(in.size());
    out.resize(n);
    fftw_plan plan = cache().get(n, sign);
    // out-of-place c2c does not modify the input array
    fftw_execute_dft(plan,
                     reinterpret_cast<fftw_complex*>(
                         const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

void forward(const std::vector<cplx>& in, std::vector<cplx>& out) {
    run(in, out, FFTW_FORWARD);
}

void inverse(const std::vector<cplx>& in, std::vector<cplx>& out) {
    run(in, out, FFTW_BACKWARD);
}

}  // namespace bloch::fft
