#pragma once

// Construction of (M,N)-PAM constellations: M Gray-labeled amplitude slots
// placed by a truncated-Gaussian CDF rule, then merged down to N distinct
// signed points. Merged points keep multiple bit labels, so the distinct
// points end up non-equiprobable as well as non-uniformly spaced.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nenu/special.hpp"
#include "nenu/types.hpp"

namespace nenu {

inline bool is_pow2_int(int v) { return v > 0 && (v & (v - 1)) == 0; }

// n-bit label of the k-th positive amplitude (rank k = 1..2^(n-1)):
// MSB 0 followed by the (n-1)-bit binary reflected Gray code of k-1.
// The MSB acts as the sign bit; -a_k carries the same label with MSB = 1.
inline uint32_t gray_label(int k, int n_bits) {
    if (n_bits < 1 || n_bits > 30) throw std::invalid_argument("gray_label: bad bit width");
    const int half = 1 << (n_bits - 1);
    if (k < 1 || k > half) throw std::invalid_argument("gray_label: rank out of range");
    const uint32_t x = static_cast<uint32_t>(k - 1);
    return x ^ (x >> 1);
}

struct LabelTable {
    int M = 0;
    int bits_per_label = 0;
    std::vector<uint32_t> labels; // positive region by rank, MSB always 0
};

inline LabelTable make_label_table(int M) {
    if (!is_pow2_int(M) || M < 4) throw std::invalid_argument("make_label_table: M must be a power of two >= 4");
    LabelTable t;
    t.M = M;
    t.bits_per_label = static_cast<int>(std::lround(std::log2(static_cast<double>(M))));
    t.labels.reserve(M / 2);
    for (int k = 1; k <= M / 2; ++k) t.labels.push_back(gray_label(k, t.bits_per_label));
    return t;
}

// phi_M(l; rho) = erfinv(rho * l / M): amplitude of the point whose merged
// sub-region has midpoint CDF index l. Monotone in both l and rho.
inline double mapper_phi(int l, int M, double rho) {
    if (l < 1 || l > M - 1) throw std::invalid_argument("mapper_phi: index out of range");
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("mapper_phi: rho must be in (0,1]");
    const double arg = rho * static_cast<double>(l) / static_cast<double>(M);
    assert(arg < 1.0);
    return erf_inv(arg);
}

// One distinct positive point: its integer index l, its (pre-normalization)
// amplitude and the number of label slots mapped onto it. Groups are kept
// in ascending amplitude order; consecutive slots share a group after merges.
struct MergeGroup {
    int l = 0;
    double amp = 0.0;
    int slots = 1;
};

struct TentativeConstellation {
    int M = 0;
    double rho = 0.0; // 0 selects the uniform (standard PAM) branch
    std::vector<MergeGroup> groups;

    int distinct_signed() const { return 2 * static_cast<int>(groups.size()); }
};

inline TentativeConstellation build_initial(int M, double rho) {
    if (!is_pow2_int(M) || M < 4) throw std::invalid_argument("build_initial: M must be a power of two >= 4");
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("build_initial: rho must be in [0,1]");
    TentativeConstellation t;
    t.M = M;
    t.rho = rho;
    t.groups.reserve(M / 2);
    for (int k = 1; k <= M / 2; ++k) {
        const int l = 2 * k - 1;
        // rho = 0: the CDF linearizes, amplitudes become proportional to l
        const double a = rho == 0.0 ? static_cast<double>(l) : mapper_phi(l, M, rho);
        t.groups.push_back({l, a, 1});
    }
    for (size_t i = 1; i < t.groups.size(); ++i) assert(t.groups[i].amp > t.groups[i - 1].amp);
    return t;
}

// Merge until N distinct signed points remain. Each step merges the
// minimum-distance adjacent pair among pairs of equal slot count, replacing
// both with phi_M((l_i+l_j)/2). The equal-count restriction is what keeps
// the merged index a natural number and each group size a doubling, and it
// is required to reproduce the reference merge tables; an unrestricted
// argmin would eventually pair points of different generations. Ties go to
// the pair closest to the origin.
inline TentativeConstellation merge_to(TentativeConstellation t, int N) {
    if (N % 2 != 0 || N < 2 || N > t.distinct_signed())
        throw std::invalid_argument("merge_to: N must be even and within [2, current distinct count]");
    while (t.distinct_signed() > N) {
        int best = -1;
        double best_d = 0.0;
        for (size_t i = 0; i + 1 < t.groups.size(); ++i) {
            if (t.groups[i].slots != t.groups[i + 1].slots) continue;
            const double d = t.groups[i + 1].amp - t.groups[i].amp;
            if (best < 0 || d < best_d) {
                best = static_cast<int>(i);
                best_d = d;
            }
        }
        assert(best >= 0); // a same-count adjacent pair always exists down to N=2
        MergeGroup& gi = t.groups[best];
        const MergeGroup& gj = t.groups[best + 1];
        assert((gi.l + gj.l) % 2 == 0);
        const int l_merged = (gi.l + gj.l) / 2;
        const double a = t.rho == 0.0 ? static_cast<double>(l_merged) : mapper_phi(l_merged, t.M, t.rho);
        assert(a > gi.amp && a < gj.amp);
        gi = {l_merged, a, gi.slots + gj.slots};
        t.groups.erase(t.groups.begin() + best + 1);
    }
    return t;
}

struct Constellation {
    int M = 0;
    int N = 0;
    double rho = 0.0;
    double Es = 0.0; // energy per 2D QAM symbol; per-dimension power is Es/2
    LabelTable labels;

    std::vector<double> amp_of_slot;       // M/2 positive amplitudes by rank (duplicated across merged slots)
    std::vector<int> index_of_slot;        // merged index l per rank slot
    std::vector<double> distinct_points;   // N/2 positive amplitudes, ascending
    std::vector<double> prob_of_point;     // per positive point, both signs counted (multiples of 2/M)

    // demapper-facing caches
    int n_bits = 0;
    std::vector<double> amp_by_label;      // size M, label value -> signed amplitude
    std::vector<double> signed_points;     // N ascending signed amplitudes
    std::vector<double> signed_point_prob; // slots/M per signed point
    // per bit level i and bit value b: distinct signed point indices in the
    // set, and the label-slot multiplicity of each (for exact LLRs)
    std::vector<std::array<std::vector<int>, 2>> level_points;
    std::vector<std::array<std::vector<double>, 2>> level_weights;

    double bit_of(uint32_t label, int i) const { return (label >> (n_bits - 1 - i)) & 1u; }
};

namespace detail {

inline void rebuild_caches(Constellation& c) {
    const int M = c.M;
    const int half = M / 2;
    c.n_bits = c.labels.bits_per_label;

    c.amp_by_label.assign(M, 0.0);
    for (int k = 0; k < half; ++k) {
        const uint32_t lab = c.labels.labels[k];
        c.amp_by_label[lab] = c.amp_of_slot[k];
        c.amp_by_label[lab | (1u << (c.n_bits - 1))] = -c.amp_of_slot[k];
    }

    c.signed_points.clear();
    c.signed_point_prob.clear();
    for (auto it = c.distinct_points.rbegin(); it != c.distinct_points.rend(); ++it)
        c.signed_points.push_back(-*it);
    for (double p : c.distinct_points) c.signed_points.push_back(p);
    for (auto it = c.prob_of_point.rbegin(); it != c.prob_of_point.rend(); ++it)
        c.signed_point_prob.push_back(*it / 2.0);
    for (double p : c.prob_of_point) c.signed_point_prob.push_back(p / 2.0);

    c.N = static_cast<int>(c.signed_points.size());

    c.level_points.assign(c.n_bits, {});
    c.level_weights.assign(c.n_bits, {});
    auto point_of = [&](double a) {
        const auto it = std::lower_bound(c.signed_points.begin(), c.signed_points.end(), a - 1e-12);
        return static_cast<int>(it - c.signed_points.begin());
    };
    for (int i = 0; i < c.n_bits; ++i) {
        std::array<std::vector<double>, 2> counts;
        counts[0].assign(c.N, 0.0);
        counts[1].assign(c.N, 0.0);
        for (int lab = 0; lab < M; ++lab) {
            const int b = (lab >> (c.n_bits - 1 - i)) & 1;
            counts[b][point_of(c.amp_by_label[lab])] += 1.0;
        }
        for (int b = 0; b < 2; ++b) {
            for (int p = 0; p < c.N; ++p) {
                if (counts[b][p] > 0.0) {
                    c.level_points[i][b].push_back(p);
                    c.level_weights[i][b].push_back(counts[b][p]);
                }
            }
        }
    }
}

} // namespace detail

// Scale amplitudes so the slot-weighted per-dimension power equals Es/2;
// the slot weighting is what realizes the point probabilities.
inline Constellation normalize(const TentativeConstellation& t, double Es) {
    if (Es <= 0.0) throw std::invalid_argument("normalize: Es must be positive");
    Constellation c;
    c.M = t.M;
    c.rho = t.rho;
    c.Es = Es;
    c.labels = make_label_table(t.M);

    double sum_sq = 0.0;
    for (const auto& g : t.groups) sum_sq += static_cast<double>(g.slots) * g.amp * g.amp;
    if (sum_sq <= 0.0) throw std::invalid_argument("normalize: all-zero amplitudes");
    const double scale = std::sqrt(Es / 2.0) / std::sqrt(2.0 / t.M * sum_sq);

    c.amp_of_slot.reserve(t.M / 2);
    c.index_of_slot.reserve(t.M / 2);
    for (const auto& g : t.groups) {
        const double a = g.amp * scale;
        c.distinct_points.push_back(a);
        c.prob_of_point.push_back(2.0 * g.slots / t.M);
        for (int s = 0; s < g.slots; ++s) {
            c.amp_of_slot.push_back(a);
            c.index_of_slot.push_back(g.l);
        }
    }
    detail::rebuild_caches(c);
    return c;
}

// Full design: truncated-Gaussian initial placement, merge to N, normalize.
// rho = 0 is the standard uniform PAM and only supports N = M.
inline Constellation design(int M, int N, double rho, double Es = 2.0) {
    if (rho == 0.0 && N != M)
        throw std::invalid_argument("design: rho = 0 is uniform PAM and requires N = M");
    TentativeConstellation t = build_initial(M, rho);
    t = merge_to(std::move(t), N);
    return normalize(t, Es);
}

struct BitLevelSet {
    std::vector<uint32_t> labels; // signed label slots with bit i == b
    std::vector<double> amps;     // matching signed amplitudes
};

inline BitLevelSet bit_level_sets(const Constellation& c, int i, int b) {
    if (i < 0 || i >= c.n_bits) throw std::invalid_argument("bit_level_sets: level out of range");
    if (b != 0 && b != 1) throw std::invalid_argument("bit_level_sets: bit value must be 0 or 1");
    BitLevelSet s;
    for (int lab = 0; lab < c.M; ++lab) {
        if (((lab >> (c.n_bits - 1 - i)) & 1) == b) {
            s.labels.push_back(static_cast<uint32_t>(lab));
            s.amps.push_back(c.amp_by_label[lab]);
        }
    }
    return s;
}

// ---- text export/import ------------------------------------------------
// One line per signed label slot: `bits l_index amplitude probability`,
// where probability is that of the signed point the label maps to. External
// NUC tables load through the same format (l_index may be 0 there).

inline void save_constellation(const Constellation& c, std::ostream& os) {
    os << "# constellation M=" << c.M << " N=" << c.N << " rho=" << c.rho << " Es=" << c.Es << "\n";
    os << "# columns: bits l_index amplitude probability\n";
    char buf[128];
    for (int region = 0; region < 2; ++region) {
        for (int k = 0; k < c.M / 2; ++k) {
            uint32_t lab = c.labels.labels[k];
            double a = c.amp_of_slot[k];
            if (region == 1) {
                lab |= 1u << (c.n_bits - 1);
                a = -a;
            }
            std::string bits;
            for (int i = 0; i < c.n_bits; ++i) bits.push_back(((lab >> (c.n_bits - 1 - i)) & 1) ? '1' : '0');
            const double prob = c.prob_of_point[std::lower_bound(c.distinct_points.begin(),
                                                                 c.distinct_points.end(),
                                                                 std::fabs(a) - 1e-12) -
                                                c.distinct_points.begin()] /
                                2.0;
            std::snprintf(buf, sizeof buf, "%s %d %.17g %.17g\n", bits.c_str(), c.index_of_slot[k], a, prob);
            os << buf;
        }
    }
}

inline void save_constellation(const Constellation& c, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_constellation: cannot open " + path);
    save_constellation(c, os);
}

inline Constellation load_constellation(std::istream& is) {
    struct Row {
        uint32_t label;
        int n_bits;
        int l;
        double amp;
    };
    std::vector<Row> rows;
    std::string line;
    while (std::getline(is, line)) {
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::string bits;
        int l = 0;
        double amp = 0.0, prob = 0.0;
        if (!(ls >> bits >> l >> amp >> prob)) throw std::runtime_error("load_constellation: malformed line: " + line);
        uint32_t lab = 0;
        for (char ch : bits) {
            if (ch != '0' && ch != '1') throw std::runtime_error("load_constellation: bad bit string: " + bits);
            lab = (lab << 1) | static_cast<uint32_t>(ch - '0');
        }
        rows.push_back({lab, static_cast<int>(bits.size()), l, amp});
    }
    if (rows.empty()) throw std::runtime_error("load_constellation: empty file");
    const int n_bits = rows.front().n_bits;
    const int M = static_cast<int>(rows.size());
    if (!is_pow2_int(M) || (1 << n_bits) != M)
        throw std::runtime_error("load_constellation: label count must be 2^bits");

    Constellation c;
    c.M = M;
    c.rho = -1.0; // unknown for loaded tables
    c.labels.M = M;
    c.labels.bits_per_label = n_bits;
    c.labels.labels.clear();

    std::vector<double> amp_by_label(M, 0.0);
    std::vector<int> l_by_label(M, 0);
    std::vector<bool> seen(M, false);
    for (const auto& r : rows) {
        if (r.n_bits != n_bits) throw std::runtime_error("load_constellation: inconsistent label width");
        if (seen[r.label]) throw std::runtime_error("load_constellation: duplicate label");
        seen[r.label] = true;
        amp_by_label[r.label] = r.amp;
        l_by_label[r.label] = r.l;
    }
    // positive region: labels with MSB 0, ordered by rank (Gray order)
    for (int k = 1; k <= M / 2; ++k) {
        const uint32_t lab = gray_label(k, n_bits);
        if (!(amp_by_label[lab] > 0.0)) throw std::runtime_error("load_constellation: positive region must have MSB 0 labels with positive amplitudes");
        const uint32_t neg = lab | (1u << (n_bits - 1));
        if (std::fabs(amp_by_label[neg] + amp_by_label[lab]) > 1e-9 * std::fabs(amp_by_label[lab]))
            throw std::runtime_error("load_constellation: constellation must be symmetric about 0");
        c.labels.labels.push_back(lab);
        c.amp_of_slot.push_back(amp_by_label[lab]);
        c.index_of_slot.push_back(l_by_label[lab]);
    }
    double power = 0.0;
    for (double a : c.amp_of_slot) power += a * a;
    c.Es = 2.0 * (2.0 / M) * power;

    // distinct points with multiplicities (amplitudes may repeat across slots)
    std::vector<double> sorted = c.amp_of_slot;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < sorted.size();) {
        size_t j = i;
        while (j < sorted.size() && sorted[j] - sorted[i] <= 1e-12 * std::fmax(1.0, sorted[i])) ++j;
        c.distinct_points.push_back(sorted[i]);
        c.prob_of_point.push_back(2.0 * static_cast<double>(j - i) / M);
        i = j;
    }
    detail::rebuild_caches(c);
    return c;
}

inline Constellation load_constellation(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_constellation: cannot open " + path);
    return load_constellation(is);
}

} // namespace nenu
