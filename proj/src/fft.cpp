#include "ghostsim/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

namespace ghostsim::fft {
namespace {

// Plan creation is not thread-safe in FFTW; execution via the new-array
// interface is, provided the arrays match the alignment of the plan's
// template buffers. All scratch is fftw_malloc'd, so alignment always
// matches. FFTW_ESTIMATE keeps planning deterministic run-to-run.
struct PlanCache {
    std::mutex mtx;
    std::map<std::tuple<int, int, int>, fftw_plan> plans;

    fftw_plan get(int nx, int ny, bool inverse) {
        std::lock_guard<std::mutex> lock(mtx);
        auto key = std::make_tuple(nx, ny, inverse ? 1 : 0);
        auto it = plans.find(key);
        if (it != plans.end()) return it->second;
        fftw_complex* a = fftw_alloc_complex(static_cast<std::size_t>(nx) * ny);
        fftw_complex* b = fftw_alloc_complex(static_cast<std::size_t>(nx) * ny);
        // FFTW's row-major (n0, n1) maps to our (ny, nx) layout.
        fftw_plan p = fftw_plan_dft_2d(ny, nx, a, b, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                       FFTW_ESTIMATE);
        fftw_free(a);
        fftw_free(b);
        plans.emplace(key, p);
        return p;
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

struct Scratch {
    fftw_complex* data = nullptr;
    std::size_t capacity = 0;

    fftw_complex* ensure(std::size_t n) {
        if (capacity < n) {
            if (data) fftw_free(data);
            data = fftw_alloc_complex(n);
            capacity = n;
        }
        return data;
    }
    ~Scratch() {
        if (data) fftw_free(data);
    }
};

} // namespace

void transform2d(int nx, int ny, const std::complex<double>* in, std::complex<double>* out,
                 bool inverse) {
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    fftw_plan plan = cache().get(nx, ny, inverse);

    thread_local Scratch sin, sout;
    fftw_complex* a = sin.ensure(n);
    fftw_complex* b = sout.ensure(n);
    std::memcpy(a, in, n * sizeof(fftw_complex));
    fftw_execute_dft(plan, a, b);
    std::memcpy(out, b, n * sizeof(fftw_complex));
}

} // namespace ghostsim::fft
