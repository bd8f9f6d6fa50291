#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "wavemesh/errors.hpp"

namespace wavemesh {

enum class WaveletFamily {
    Haar,
    Daub2,
    Daub3,
    Daub4,
    Daub5,
    Daub6,
    Daub7,
    Daub8,
    Daub9,
    Daub10,
};

/// Quadrature mirror filter pair. The highpass is derived from the lowpass
/// by g[k] = (-1)^k h[L-1-k], so the pair is orthonormal by construction;
/// the factory still validates the tabulated taps.
struct WaveletFilter {
    WaveletFamily family = WaveletFamily::Daub4;
    std::string name;
    std::vector<double> lowpass;
    std::vector<double> highpass;
};

namespace detail {

// Extremal-phase Daubechies lowpass taps, 15 significant digits, obtained by
// spectral factorization of the half-band polynomial at 60-digit precision.
inline const std::vector<double>& daub_lowpass(int vanishing_moments) {
    static const std::vector<std::vector<double>> tables = {
        // db2
        {0.482962913144534, 0.836516303737808, 0.224143868042013, -0.129409522551260},
        // db3
        {0.332670552950083, 0.806891509311093, 0.459877502118492, -0.135011020010255,
         -0.0854412738820267, 0.0352262918857095},
        // db4
        {0.230377813308897, 0.714846570552916, 0.630880767929859, -0.0279837694168599,
         -0.187034811719093, 0.0308413818355608, 0.0328830116668852, -0.0105974017850690},
        // db5
        {0.160102397974193, 0.603829269797190, 0.724308528437773, 0.138428145901321,
         -0.242294887066382, -0.0322448695846384, 0.0775714938400457, -0.00624149021279827,
         -0.0125807519990820, 0.00333572528547377},
        // db6
        {0.111540743350109, 0.494623890398453, 0.751133908021095, 0.315250351709198,
         -0.226264693965440, -0.129766867567262, 0.0975016055873230, 0.0275228655303057,
         -0.0315820393174860, 0.000553842201161496, 0.00477725751094551, -0.00107730108530848},
        // db7
        {0.0778520540850092, 0.396539319481917, 0.729132090846235, 0.469782287405193,
         -0.143906003928565, -0.224036184993875, 0.0713092192668303, 0.0806126091510831,
         -0.0380299369350144, -0.0165745416306669, 0.0125509985560998, 0.000429577972921367,
         -0.00180164070404749, 0.000353713799974520},
        // db8
        {0.0544158422431040, 0.312871590914300, 0.675630736297290, 0.585354683654207,
         -0.0158291052563493, -0.284015542961547, 0.000472484573913283, 0.128747426620478,
         -0.0173693010018075, -0.0440882539307948, 0.0139810279173983, 0.00874609404740578,
         -0.00487035299345157, -0.000391740373376947, 0.000675449406450569, -0.000117476784124770},
        // db9
        {0.0380779473638783, 0.243834674612590, 0.604823123690111, 0.657288078051301,
         0.133197385825008, -0.293273783279175, -0.0968407832229765, 0.148540749338106,
         0.0307256814793334, -0.0676328290613300, 0.000250947114831452, 0.0223616621236791,
         -0.00472320475775140, -0.00428150368246343, 0.00184764688305623, 0.000230385763523196,
         -0.000251963188942710, 0.0000393473203162716},
        // db10
        {0.0266700579005556, 0.188176800077691, 0.527201188931726, 0.688459039453604,
         0.281172343660577, -0.249846424327315, -0.195946274377377, 0.127369340335793,
         0.0930573646035724, -0.0713941471663971, -0.0294575368218758, 0.0332126740593410,
         0.00360655356695617, -0.0107331754833306, 0.00139535174705290, 0.00199240529518506,
         -0.000685856694959712, -0.000116466855129285, 0.0000935886703200696, -0.0000132642028945212},
    };
    return tables.at(static_cast<std::size_t>(vanishing_moments - 2));
}

inline bool is_power_of_two(std::size_t k) { return k != 0 && (k & (k - 1)) == 0; }

inline int log2_exact(std::size_t k) {
    int j = 0;
    while ((std::size_t{1} << j) < k) ++j;
    return j;
}

inline void validate_filter(const WaveletFilter& f) {
    const auto& h = f.lowpass;
    const auto& g = f.highpass;
    if (h.size() % 2 != 0 || h.empty() || g.size() != h.size())
        throw std::logic_error("wavelet filter: tap count must be even and matched");
    const double sqrt2 = std::sqrt(2.0);
    double sum = std::accumulate(h.begin(), h.end(), 0.0);
    double norm_h = std::inner_product(h.begin(), h.end(), h.begin(), 0.0);
    double norm_g = std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    double cross = std::inner_product(h.begin(), h.end(), g.begin(), 0.0);
    if (std::abs(sum - sqrt2) > 1e-12 || std::abs(norm_h - 1.0) > 1e-12 ||
        std::abs(norm_g - 1.0) > 1e-12 || std::abs(cross) > 1e-12)
        throw std::logic_error("wavelet filter '" + f.name + "' fails orthonormality checks");
}

} // namespace detail

inline WaveletFilter make_filter(WaveletFamily family) {
    WaveletFilter f;
    f.family = family;
    if (family == WaveletFamily::Haar) {
        const double r = 1.0 / std::sqrt(2.0);
        f.name = "haar";
        f.lowpass = {r, r};
    } else {
        int vm = static_cast<int>(family) - static_cast<int>(WaveletFamily::Daub2) + 2;
        f.name = "db" + std::to_string(vm);
        f.lowpass = detail::daub_lowpass(vm);
    }
    const std::size_t L = f.lowpass.size();
    f.highpass.resize(L);
    for (std::size_t k = 0; k < L; ++k) {
        double v = f.lowpass[L - 1 - k];
        f.highpass[k] = (k % 2 == 0) ? v : -v;
    }
    detail::validate_filter(f);
    return f;
}

inline WaveletFilter make_filter(const std::string& name) {
    if (name == "haar") return make_filter(WaveletFamily::Haar);
    if (name.rfind("db", 0) == 0) {
        int vm = std::stoi(name.substr(2));
        if (vm >= 2 && vm <= 10)
            return make_filter(static_cast<WaveletFamily>(static_cast<int>(WaveletFamily::Daub2) + vm - 2));
    }
    throw std::invalid_argument("unknown wavelet family '" + name + "' (expected haar or db2..db10)");
}

/// Wavelet coefficients of a length-K dyadic signal: a father block of size
/// 2^j0 followed by the mother block for level j at indices [2^j, 2^{j+1})
/// for j = j0 .. log2(K)-1.
struct CoefficientVector {
    std::vector<double> values;
    int j0 = 0;

    std::size_t K() const { return values.size(); }
    int levels() const { return detail::log2_exact(values.size()); }
};

enum class CoefficientKind { Father, Mother };

struct LevelIndex {
    CoefficientKind kind;
    int level;        // resolution level j
    std::size_t pos;  // translation index within the level
};

/// Maps a flat coefficient index to its (kind, level, position). Total on
/// [0, K) for any valid j0.
inline LevelIndex level_of_index(std::size_t index, std::size_t K, int j0) {
    if (index >= K) throw LayoutMismatch("coefficient index out of range");
    const std::size_t father = std::size_t{1} << j0;
    if (index < father) return {CoefficientKind::Father, j0, index};
    int j = j0;
    while ((std::size_t{1} << (j + 1)) <= index) ++j;
    return {CoefficientKind::Mother, j, index - (std::size_t{1} << j)};
}

namespace detail {

inline void check_dyadic(std::size_t K) {
    if (K < 2 || !is_power_of_two(K))
        throw NonDyadicLength("signal length " + std::to_string(K) + " is not 2^J with J >= 1");
}

inline void check_level(std::size_t K, int j0) {
    const int J = log2_exact(K);
    if (j0 < 0 || j0 >= J)
        throw InvalidLevel("minimum resolution level " + std::to_string(j0) +
                           " must satisfy 0 <= j0 < log2(K) = " + std::to_string(J));
}

} // namespace detail

/// Forward orthonormal DWT via the pyramid algorithm with periodic boundary.
/// O(K) per call; dwt of a constant c yields father coefficient c*sqrt(K)
/// at j0 = 0.
inline CoefficientVector dwt(const std::vector<double>& signal, const WaveletFilter& filter, int j0 = 0) {
    const std::size_t K = signal.size();
    detail::check_dyadic(K);
    detail::check_level(K, j0);

    const auto& h = filter.lowpass;
    const auto& g = filter.highpass;
    const std::size_t L = h.size();
    const std::size_t coarsest = std::size_t{1} << j0;

    CoefficientVector out;
    out.j0 = j0;
    out.values.resize(K);

    std::vector<double> approx = signal;
    std::vector<double> next;
    for (std::size_t n = K; n > coarsest; n /= 2) {
        const std::size_t half = n / 2;
        next.assign(half, 0.0);
        for (std::size_t k = 0; k < half; ++k) {
            double s = 0.0, d = 0.0;
            for (std::size_t m = 0; m < L; ++m) {
                const double a = approx[(2 * k + m) % n];
                s += h[m] * a;
                d += g[m] * a;
            }
            next[k] = s;
            out.values[half + k] = d;  // mother level log2(half)
        }
        approx.swap(next);
    }
    std::copy(approx.begin(), approx.end(), out.values.begin());
    return out;
}

/// Inverse DWT; exact adjoint of the analysis steps, so idwt(dwt(y)) == y up
/// to roundoff for every dyadic y.
inline std::vector<double> idwt(const CoefficientVector& coeffs, const WaveletFilter& filter) {
    const std::size_t K = coeffs.K();
    detail::check_dyadic(K);
    detail::check_level(K, coeffs.j0);

    const auto& h = filter.lowpass;
    const auto& g = filter.highpass;
    const std::size_t L = h.size();
    const std::size_t coarsest = std::size_t{1} << coeffs.j0;

    std::vector<double> approx(coeffs.values.begin(), coeffs.values.begin() + coarsest);
    std::vector<double> next;
    for (std::size_t n = 2 * coarsest; n <= K; n *= 2) {
        const std::size_t half = n / 2;
        next.assign(n, 0.0);
        for (std::size_t k = 0; k < half; ++k) {
            const double a = approx[k];
            const double d = coeffs.values[half + k];
            for (std::size_t m = 0; m < L; ++m) {
                next[(2 * k + m) % n] += h[m] * a + g[m] * d;
            }
        }
        approx.swap(next);
    }
    return approx;
}

/// Minimal dense row-major matrix, used for the explicit W oracle and test
/// diagnostics only.
struct DenseMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Explicit K x K transform matrix with W*y == dwt(y); columns are the DWT
/// images of basis vectors. Test-oracle use, K <= 1024.
inline DenseMatrix build_w_matrix(std::size_t K, const WaveletFilter& filter, int j0 = 0) {
    detail::check_dyadic(K);
    detail::check_level(K, j0);
    if (K > 1024) throw std::invalid_argument("build_w_matrix supports K <= 1024");

    DenseMatrix W(K, K);
    std::vector<double> basis(K, 0.0);
    for (std::size_t i = 0; i < K; ++i) {
        basis[i] = 1.0;
        CoefficientVector col = dwt(basis, filter, j0);
        for (std::size_t l = 0; l < K; ++l) W(l, i) = col.values[l];
        basis[i] = 0.0;
    }
    return W;
}

} // namespace wavemesh
