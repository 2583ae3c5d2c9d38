// Copyright 2026 The rxleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rxleak/attack.hpp"
#include "rxleak/bits.hpp"
#include "rxleak/errors.hpp"
#include "rxleak/parallel.hpp"
#include "rxleak/pipeline.hpp"
#include "rxleak/rng.hpp"
#include "rxleak/text.hpp"

namespace rxleak {

// ---------------------------------------------------------------------------
// One-time pad over a subset of positions. An X gate before measurement flips
// the measured basis state, so padding a preparation and unpadding the
// measured bits are the same XOR.

inline BitString apply_pad(const BitString &bits, const BitString &pad, const std::vector<std::size_t> &positions) {
    if (pad.size() != positions.size()) {
        throw ValidationError("pad length " + std::to_string(pad.size()) + " does not match " +
                              std::to_string(positions.size()) + " padded positions");
    }
    BitString out = bits;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] >= bits.size()) {
            throw ValidationError("pad position " + std::to_string(positions[i]) + " outside a " +
                                  std::to_string(bits.size()) + "-bit string");
        }
        out.set(positions[i], bits[positions[i]] != pad[i]);
    }
    return out;
}

/// Pad covering every bit.
inline BitString apply_pad(const BitString &bits, const BitString &pad) {
    if (pad.size() != bits.size()) {
        throw ValidationError("pad length " + std::to_string(pad.size()) + " does not match bit-string length " +
                              std::to_string(bits.size()));
    }
    return bits ^ pad;
}

inline BitString unscramble(const BitString &measured, const BitString &pad,
                            const std::vector<std::size_t> &positions) {
    return apply_pad(measured, pad, positions);
}

inline BitString unscramble(const BitString &measured, const BitString &pad) {
    return apply_pad(measured, pad);
}

inline BitString random_pad(std::size_t n, Rng &rng) {
    boost::random::uniform_int_distribution<int> bit(0, 1);
    BitString pad(n);
    for (std::size_t i = 0; i < n; ++i) {
        pad.set(i, bit(rng));
    }
    return pad;
}

/// Total variation distance between two empirical histograms.
inline double total_variation(const std::map<BitString, std::uint64_t> &a, const std::map<BitString, std::uint64_t> &b) {
    auto total = [](const auto &h) {
        std::uint64_t n = 0;
        for (const auto &[k, c] : h) {
            n += c;
        }
        return static_cast<double>(n);
    };
    double na = total(a), nb = total(b);
    if (na == 0 || nb == 0) {
        throw ValidationError("total_variation of an empty histogram");
    }
    std::set<BitString> keys;
    for (const auto &[k, c] : a) {
        keys.insert(k);
    }
    for (const auto &[k, c] : b) {
        keys.insert(k);
    }
    double d = 0;
    for (const auto &k : keys) {
        auto ia = a.find(k);
        auto ib = b.find(k);
        double pa = ia == a.end() ? 0.0 : static_cast<double>(ia->second) / na;
        double pb = ib == b.end() ? 0.0 : static_cast<double>(ib->second) / nb;
        d += std::abs(pa - pb);
    }
    return d / 2;
}

/// Every victim string of `cfg` with attackers in 0, in class-index order.
inline std::vector<BitString> attack_preparations(const AttackConfiguration &cfg) {
    std::vector<BitString> out;
    for (const auto &v : all_basis_states(cfg.victims.size())) {
        out.push_back(cfg.preparation(v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output scrambling.

enum class PadPolicy { fresh, fixed };

inline const char *to_string(PadPolicy p) {
    return p == PadPolicy::fresh ? "fresh" : "fixed";
}

struct ScramblingParams {
    PadPolicy policy = PadPolicy::fresh;
    std::size_t shots_per_victim = 2048;
    /// Shots sharing one pad. Defaults to the attack window.
    std::size_t pad_block = 0;
    /// Shots per victim string in the user-recovery check; 0 skips it.
    std::size_t recovery_shots = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    AttackParams attack;
    /// Also attack the unpadded stream. The stream does not depend on the
    /// policy, so one baseline serves both policies for a given seed.
    bool baseline = true;
};

struct ScramblingReport {
    PadPolicy policy = PadPolicy::fresh;
    double chance = 0;
    /// Attack on unpadded runs of the same shot stream.
    double undefended_accuracy = 0;
    /// Attack scored against the true victim strings.
    double defended_accuracy = 0;
    /// Attack scored against the padded strings actually on the device.
    double padded_accuracy = 0;
    /// max and mean over victim strings of the total variation distance
    /// between unscrambled and independent undefended victim histograms.
    double recovery_tvd_max = 0;
    double recovery_tvd_mean = 0;
    /// Mean number of distinct victim outcomes per victim string.
    double support_undefended = 0;
    double support_recovered = 0;
};

namespace detail {

inline BitString pad_for(const ScramblingParams &p, const BitString &victim, std::size_t block,
                         std::size_t width) {
    const std::uint64_t base = mix_seed(p.seed, streams::kPads);
    if (p.policy == PadPolicy::fixed) {
        Rng rng(base);
        return random_pad(width, rng);
    }
    Rng rng(mix_seed(mix_seed(base, victim.index()), block));
    return random_pad(width, rng);
}

}  // namespace detail

/// Runs the attack against padded victim preparations. The pad schedule lives
/// only in this function; the attack sees (label, measured) pairs.
inline ScramblingReport evaluate_scrambling(const ReadoutPipeline &pipeline, const AttackConfiguration &cfg,
                                            const ScramblingParams &params) {
    const std::size_t block = params.pad_block ? params.pad_block : params.attack.window;
    if (block == 0) {
        throw ValidationError("pad block must be >= 1");
    }
    const auto preps = attack_preparations(cfg);
    const std::size_t per = params.shots_per_victim;
    const std::size_t width = cfg.victims.size();
    const std::uint64_t stream = mix_seed(params.seed, streams::kAttack);

    ScramblingReport r;
    r.policy = params.policy;
    r.chance = cfg.chance();

    if (params.baseline) {
        auto undefended = collect_outcomes(pipeline, preps, per, stream, params.threads);
        r.undefended_accuracy = run_attack(undefended, cfg, params.attack).eval_accuracy;
    }

    std::vector<Outcome> true_labels(preps.size() * per), padded_labels(preps.size() * per);
    parallel_for(true_labels.size(), params.threads, [&](std::size_t i) {
        const auto &prep = preps[i / per];
        const std::size_t k = i % per;
        auto pad = detail::pad_for(params, cfg.victim_bits(prep), k / block, width);
        auto physical = apply_pad(prep, pad, cfg.victims);
        auto rng = prep_shot_rng(stream, physical, k);
        auto measured = pipeline.measure(physical, rng, k);
        true_labels[i] = {prep, measured};
        padded_labels[i] = {physical, measured};
    });
    // Fresh pads: windows follow the pad schedule, so each window holds one pad.
    auto attack = params.attack;
    if (params.policy == PadPolicy::fresh) {
        attack.shuffle = false;
    }
    r.defended_accuracy = run_attack(true_labels, cfg, attack).eval_accuracy;
    r.padded_accuracy = run_attack(padded_labels, cfg, params.attack).eval_accuracy;

    if (params.recovery_shots == 0) {
        return r;
    }
    const std::size_t n = params.recovery_shots;
    const std::uint64_t scrambled_stream = mix_seed(params.seed, streams::kDefense);
    const std::uint64_t plain_stream = mix_seed(params.seed, streams::kEvaluation);
    std::vector<BitString> recovered(preps.size() * n), plain(preps.size() * n);
    parallel_for(recovered.size(), params.threads, [&](std::size_t i) {
        const auto &prep = preps[i / n];
        const std::size_t k = i % n;
        auto pad = detail::pad_for(params, cfg.victim_bits(prep), k / block, width);
        auto physical = apply_pad(prep, pad, cfg.victims);
        auto rng = prep_shot_rng(scrambled_stream, physical, k);
        recovered[i] = cfg.victim_bits(unscramble(pipeline.measure(physical, rng, k), pad, cfg.victims));
        auto plain_rng = prep_shot_rng(plain_stream, prep, k);
        plain[i] = cfg.victim_bits(pipeline.measure(prep, plain_rng, k));
    });
    for (std::size_t v = 0; v < preps.size(); ++v) {
        std::map<BitString, std::uint64_t> hr, hp;
        for (std::size_t k = 0; k < n; ++k) {
            ++hr[recovered[v * n + k]];
            ++hp[plain[v * n + k]];
        }
        double d = total_variation(hr, hp);
        r.recovery_tvd_max = std::max(r.recovery_tvd_max, d);
        r.recovery_tvd_mean += d;
        r.support_recovered += static_cast<double>(hr.size());
        r.support_undefended += static_cast<double>(hp.size());
    }
    const auto nv = static_cast<double>(preps.size());
    r.recovery_tvd_mean /= nv;
    r.support_recovered /= nv;
    r.support_undefended /= nv;
    return r;
}

// ---------------------------------------------------------------------------
// Mapping randomization. A mapping sends logical qubit i to physical qubit
// perm[i]; the whole register (attacker and victim) moves together.

using QubitMapping = std::vector<std::size_t>;

inline void validate_mapping(const QubitMapping &perm, std::size_t n_qubits) {
    if (perm.size() != n_qubits) {
        throw ValidationError("mapping has " + std::to_string(perm.size()) + " entries for " +
                              std::to_string(n_qubits) + " qubits");
    }
    std::vector<bool> hit(n_qubits, false);
    for (auto p : perm) {
        if (p >= n_qubits || hit[p]) {
            throw ValidationError("mapping is not a bijection: physical qubit " + std::to_string(p) +
                                  (p >= n_qubits ? " out of range" : " assigned twice"));
        }
        hit[p] = true;
    }
}

inline BitString to_physical(const BitString &logical, const QubitMapping &perm) {
    BitString out(logical.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.set(perm[i], logical[i]);
    }
    return out;
}

inline BitString to_logical(const BitString &physical, const QubitMapping &perm) {
    BitString out(physical.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.set(i, physical[perm[i]]);
    }
    return out;
}

/// Notation of `cfg` after moving each logical position i to perm[i].
inline std::string map_notation(const std::string &notation, const QubitMapping &perm) {
    std::string out(notation.size(), '?');
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out[perm[i]] = notation[i];
    }
    return out;
}

struct MappingMember {
    QubitMapping mapping;
    /// Shot indices [begin, end) of every preparation run under this mapping.
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct MappingEnsemble {
    std::size_t n_qubits = 0;
    std::size_t n_shots = 0;
    std::vector<MappingMember> members;

    const QubitMapping &mapping_for(std::size_t shot) const {
        for (const auto &m : members) {
            if (shot >= m.begin && shot < m.end) {
                return m.mapping;
            }
        }
        throw ValidationError("shot " + std::to_string(shot) + " is outside the ensemble schedule");
    }
};

inline void validate(const MappingEnsemble &e) {
    if (e.members.empty()) {
        throw ValidationError("mapping ensemble is empty");
    }
    std::size_t next = 0;
    for (const auto &m : e.members) {
        validate_mapping(m.mapping, e.n_qubits);
        if (m.begin != next || m.end <= m.begin) {
            throw ValidationError("mapping ensemble ranges do not partition the shot indices at shot " +
                                  std::to_string(next));
        }
        next = m.end;
    }
    if (next != e.n_shots) {
        throw ValidationError("mapping ensemble ranges cover " + std::to_string(next) + " of " +
                              std::to_string(e.n_shots) + " shots");
    }
}

/// Splits [0, n_shots) into contiguous blocks, one per mapping.
inline MappingEnsemble make_ensemble(std::size_t n_qubits, std::size_t n_shots, std::vector<QubitMapping> mappings) {
    if (mappings.empty() || mappings.size() > n_shots) {
        throw ValidationError("ensemble size must lie in [1, shots]");
    }
    MappingEnsemble e{n_qubits, n_shots, {}};
    const std::size_t m = mappings.size();
    for (std::size_t i = 0; i < m; ++i) {
        e.members.push_back({std::move(mappings[i]), i * n_shots / m, (i + 1) * n_shots / m});
    }
    validate(e);
    return e;
}

inline QubitMapping identity_mapping(std::size_t n) {
    QubitMapping p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return p;
}

/// Identity first, then uniformly random permutations. With one member the
/// ensemble is the fixed mapping.
inline MappingEnsemble randomize_mapping(std::size_t n_qubits, std::size_t ensemble_size, std::size_t n_shots,
                                         std::uint64_t seed) {
    Rng rng(mix_seed(seed, streams::kMapping));
    std::vector<QubitMapping> maps{identity_mapping(n_qubits)};
    while (maps.size() < ensemble_size) {
        auto p = identity_mapping(n_qubits);
        shuffle_in_place(p, rng);
        maps.push_back(std::move(p));
    }
    return make_ensemble(n_qubits, n_shots, std::move(maps));
}

/// The n cyclic shifts i -> (i + r) mod n, r = 0..n-1.
inline MappingEnsemble cyclic_ensemble(std::size_t n_qubits, std::size_t n_shots) {
    std::vector<QubitMapping> maps;
    for (std::size_t r = 0; r < n_qubits; ++r) {
        QubitMapping p(n_qubits);
        for (std::size_t i = 0; i < n_qubits; ++i) {
            p[i] = (i + r) % n_qubits;
        }
        maps.push_back(std::move(p));
    }
    return make_ensemble(n_qubits, n_shots, std::move(maps));
}

/// Logical outcomes of shots run under the ensemble schedule. Shot k of a
/// logical preparation runs physical preparation perm(prep) from the stream
/// of that physical preparation, so a one-member identity ensemble reproduces
/// `collect_outcomes` bit for bit.
inline std::vector<Outcome> collect_mapped_outcomes(const ReadoutPipeline &pipeline, std::span<const BitString> preps,
                                                    const MappingEnsemble &ensemble, std::uint64_t seed,
                                                    unsigned threads = 1) {
    validate(ensemble);
    if (ensemble.n_qubits != pipeline.device.n_qubits()) {
        throw ValidationError("mapping ensemble width differs from the device");
    }
    const std::size_t per = ensemble.n_shots;
    std::vector<Outcome> out(preps.size() * per);
    parallel_for(out.size(), threads, [&](std::size_t i) {
        const auto &prep = preps[i / per];
        const std::size_t k = i % per;
        const auto &perm = ensemble.mapping_for(k);
        auto physical = to_physical(prep, perm);
        auto rng = prep_shot_rng(seed, physical, k);
        out[i] = {prep, to_logical(pipeline.measure(physical, rng, k), perm)};
    });
    return out;
}

struct RandomizationReport {
    std::size_t ensemble_size = 0;
    double chance = 0;
    double fixed_accuracy = 0;
    double randomized_accuracy = 0;
};

inline RandomizationReport evaluate_randomization(const ReadoutPipeline &pipeline, const AttackConfiguration &cfg,
                                                  const MappingEnsemble &ensemble, std::uint64_t seed,
                                                  const AttackParams &attack, unsigned threads = 1) {
    const auto preps = attack_preparations(cfg);
    const std::uint64_t stream = mix_seed(seed, streams::kAttack);
    RandomizationReport r;
    r.ensemble_size = ensemble.members.size();
    r.chance = cfg.chance();
    auto fixed = collect_outcomes(pipeline, preps, ensemble.n_shots, stream, threads);
    r.fixed_accuracy = run_attack(fixed, cfg, attack).eval_accuracy;
    auto mixed = collect_mapped_outcomes(pipeline, preps, ensemble, stream, threads);
    r.randomized_accuracy = run_attack(mixed, cfg, attack).eval_accuracy;
    return r;
}

// ---------------------------------------------------------------------------
// Feedline sandboxing.

enum class AllocationPolicy { sandboxed, unrestricted };

inline const char *to_string(AllocationPolicy p) {
    return p == AllocationPolicy::sandboxed ? "sandboxed" : "unrestricted";
}

struct FeedlineGrouping {
    /// Qubit ids per feedline.
    std::vector<std::vector<std::size_t>> groups;
    /// Whether one user may span several feedline groups.
    bool inter_group_coupling = false;

    std::size_t n_qubits() const {
        std::size_t n = 0;
        for (const auto &g : groups) {
            n += g.size();
        }
        return n;
    }
};

/// `n_groups` feedlines of `group_size` consecutive qubits.
inline FeedlineGrouping uniform_grouping(std::size_t n_groups, std::size_t group_size) {
    FeedlineGrouping g;
    for (std::size_t i = 0; i < n_groups; ++i) {
        std::vector<std::size_t> ids(group_size);
        std::iota(ids.begin(), ids.end(), i * group_size);
        g.groups.push_back(std::move(ids));
    }
    return g;
}

inline void validate(const FeedlineGrouping &g) {
    const std::size_t n = g.n_qubits();
    std::vector<bool> hit(n, false);
    for (std::size_t i = 0; i < g.groups.size(); ++i) {
        if (g.groups[i].empty()) {
            throw ValidationError("feedline group " + std::to_string(i) + " is empty");
        }
        for (auto q : g.groups[i]) {
            if (q >= n || hit[q]) {
                throw ValidationError("feedline groups do not partition qubits 0.." + std::to_string(n - 1) +
                                      " (qubit " + std::to_string(q) + ")");
            }
            hit[q] = true;
        }
    }
}

struct UserAssignment {
    std::size_t user = 0;
    std::size_t request = 0;
    bool satisfied = false;
    std::vector<std::size_t> groups;
    std::vector<std::size_t> qubits;
};

struct AllocationReport {
    AllocationPolicy policy = AllocationPolicy::sandboxed;
    /// In user order.
    std::vector<UserAssignment> assignments;
    std::vector<std::size_t> rejected;
    std::size_t used_qubits = 0;
    /// Qubits unavailable to anyone else: whole groups when sandboxed.
    std::size_t reserved_qubits = 0;
    std::size_t total_qubits = 0;
    std::size_t groups_touched = 0;
    double utilization = 0;
};

/// First-fit-decreasing. Sandboxed users receive whole free groups (several
/// only if `inter_group_coupling`); unrestricted users receive the next free
/// qubits in group order. Requests that cannot be placed are reported.
inline AllocationReport sandbox_allocate(std::span<const std::size_t> requests, const FeedlineGrouping &grouping,
                                         AllocationPolicy policy) {
    validate(grouping);
    for (std::size_t u = 0; u < requests.size(); ++u) {
        if (requests[u] == 0) {
            throw ValidationError("request of user " + std::to_string(u) + " must be positive");
        }
    }
    AllocationReport r;
    r.policy = policy;
    r.total_qubits = grouping.n_qubits();
    r.assignments.resize(requests.size());
    std::vector<std::size_t> order(requests.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return requests[a] > requests[b]; });

    const std::size_t ng = grouping.groups.size();
    std::vector<bool> group_taken(ng, false);
    std::vector<std::size_t> group_used(ng, 0);  // unrestricted: qubits handed out per group

    for (auto u : order) {
        auto &a = r.assignments[u];
        a.user = u;
        a.request = requests[u];
        if (policy == AllocationPolicy::sandboxed) {
            std::vector<std::size_t> chosen;
            for (std::size_t g = 0; g < ng; ++g) {
                if (!group_taken[g] && grouping.groups[g].size() >= a.request) {
                    chosen = {g};
                    break;
                }
            }
            if (chosen.empty() && grouping.inter_group_coupling) {
                std::size_t have = 0;
                for (std::size_t g = 0; g < ng && have < a.request; ++g) {
                    if (!group_taken[g]) {
                        chosen.push_back(g);
                        have += grouping.groups[g].size();
                    }
                }
                if (have < a.request) {
                    chosen.clear();
                }
            }
            if (chosen.empty()) {
                continue;
            }
            for (auto g : chosen) {
                group_taken[g] = true;
                a.groups.push_back(g);
                r.reserved_qubits += grouping.groups[g].size();
                for (auto q : grouping.groups[g]) {
                    if (a.qubits.size() < a.request) {
                        a.qubits.push_back(q);
                    }
                }
            }
            a.satisfied = true;
        } else {
            std::size_t free = 0;
            for (std::size_t g = 0; g < ng; ++g) {
                free += grouping.groups[g].size() - group_used[g];
            }
            if (free < a.request) {
                continue;
            }
            for (std::size_t g = 0; g < ng && a.qubits.size() < a.request; ++g) {
                bool touched = false;
                while (group_used[g] < grouping.groups[g].size() && a.qubits.size() < a.request) {
                    a.qubits.push_back(grouping.groups[g][group_used[g]++]);
                    touched = true;
                }
                if (touched) {
                    a.groups.push_back(g);
                }
            }
            r.reserved_qubits += a.request;
            a.satisfied = true;
        }
    }

    std::set<std::size_t> touched;
    for (const auto &a : r.assignments) {
        if (a.satisfied) {
            r.used_qubits += a.request;
            touched.insert(a.groups.begin(), a.groups.end());
        } else {
            r.rejected.push_back(a.user);
        }
    }
    r.groups_touched = touched.size();
    r.utilization = r.total_qubits ? static_cast<double>(r.used_qubits) / static_cast<double>(r.total_qubits) : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string defense_csv_header() {
    return "defense,parameterization,undefended_accuracy,defended_accuracy,recovery_distance\n";
}

inline std::string defense_csv_row(const std::string &defense, const std::string &parameterization,
                                   double undefended, double defended, double recovery) {
    return defense + "," + parameterization + "," + text::format_double(undefended) + "," +
           text::format_double(defended) + "," + text::format_double(recovery) + "\n";
}

inline std::string allocation_csv_header() {
    return "policy,user,request,status,group_ids,qubit_ids,utilization\n";
}

inline std::string allocation_csv_rows(const AllocationReport &r) {
    auto join = [](const std::vector<std::size_t> &v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += (i ? ";" : "") + std::to_string(v[i]);
        }
        return s;
    };
    std::string out;
    for (const auto &a : r.assignments) {
        out += std::string(to_string(r.policy)) + "," + std::to_string(a.user) + "," + std::to_string(a.request) +
               "," + (a.satisfied ? "assigned" : "rejected") + "," + join(a.groups) + "," + join(a.qubits) + "," +
               text::format_double(r.utilization) + "\n";
    }
    return out;
}

}  // namespace rxleak
