#include "ghzw/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ghzw::fock {

namespace {

double abs2(const Complex& z) {
    return z.real() * z.real() + z.imag() * z.imag();
}

} // namespace

// ---------------------------------------------------------------- registry

std::shared_ptr<const ModeRegistry::Data>
ModeRegistry::build(std::vector<std::string> labels, std::vector<int> n_max) {
    if (labels.size() != n_max.size())
        throw UsageError("mode registry: one cutoff per mode required");
    auto data = std::make_shared<Data>();
    data->modes.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (n_max[i] < 1)
            throw UsageError("mode registry: n_max must be >= 1");
        if (labels[i].empty())
            throw UsageError("mode registry: empty mode label");
        auto [it, fresh] = data->by_label.emplace(labels[i],
                                                  static_cast<std::uint32_t>(i));
        if (!fresh)
            throw UsageError("mode registry: duplicate label '" + labels[i] + "'");
        data->modes.push_back(ModeId{static_cast<std::uint32_t>(i),
                                     std::move(labels[i])});
    }
    data->n_max = std::move(n_max);
    return data;
}

ModeRegistry::ModeRegistry() : data_(build({}, {})) {}

ModeRegistry::ModeRegistry(std::vector<std::string> labels, int n_max) {
    std::vector<int> cutoffs(labels.size(), n_max);
    data_ = build(std::move(labels), std::move(cutoffs));
}

ModeRegistry::ModeRegistry(std::vector<std::string> labels, std::vector<int> n_max)
    : data_(build(std::move(labels), std::move(n_max))) {}

const ModeId& ModeRegistry::mode(std::string_view label) const {
    auto it = data_->by_label.find(label);
    if (it == data_->by_label.end())
        throw UsageError("unregistered mode '" + std::string(label) + "'");
    return data_->modes[it->second];
}

const ModeId& ModeRegistry::mode(std::size_t index) const {
    if (index >= data_->modes.size())
        throw UsageError("mode index out of range");
    return data_->modes[index];
}

bool ModeRegistry::has(std::string_view label) const {
    return data_->by_label.find(label) != data_->by_label.end();
}

ModeRegistry ModeRegistry::extended(const std::vector<std::string>& labels,
                                    int n_max) const {
    std::vector<std::string> names;
    std::vector<int> cutoffs;
    names.reserve(size() + labels.size());
    cutoffs.reserve(size() + labels.size());
    for (std::size_t i = 0; i < size(); ++i) {
        names.push_back(data_->modes[i].label);
        cutoffs.push_back(data_->n_max[i]);
    }
    for (const auto& l : labels) {
        names.push_back(l);
        cutoffs.push_back(n_max);
    }
    return ModeRegistry(std::move(names), std::move(cutoffs));
}

bool ModeRegistry::same_as(const ModeRegistry& other) const {
    if (data_ == other.data_) return true;
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (data_->modes[i].label != other.data_->modes[i].label) return false;
        if (data_->n_max[i] != other.data_->n_max[i]) return false;
    }
    return true;
}

bool ModeRegistry::is_prefix_of(const ModeRegistry& other) const {
    if (size() > other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (data_->modes[i].label != other.data_->modes[i].label) return false;
        if (data_->n_max[i] != other.data_->n_max[i]) return false;
    }
    return true;
}

ModeRegistry concat(const ModeRegistry& a, const ModeRegistry& b) {
    std::vector<std::string> names;
    std::vector<int> cutoffs;
    names.reserve(a.size() + b.size());
    cutoffs.reserve(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        names.push_back(a.data_->modes[i].label);
        cutoffs.push_back(a.data_->n_max[i]);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (a.has(b.data_->modes[i].label))
            throw UsageError("tensor: overlapping mode label '" +
                             b.data_->modes[i].label + "'");
        names.push_back(b.data_->modes[i].label);
        cutoffs.push_back(b.data_->n_max[i]);
    }
    return ModeRegistry(std::move(names), std::move(cutoffs));
}

// ------------------------------------------------------------- state vector

StateVector::StateVector(ModeRegistry registry, std::vector<Term> terms)
    : registry_(std::move(registry)) {
    for (const auto& [occ, amp] : terms) {
        if (occ.size() != registry_.size())
            throw UsageError("state term does not match registry size");
        if (!std::isfinite(amp.real()) || !std::isfinite(amp.imag()))
            throw NumericalError("non-finite amplitude");
    }
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return a.first < b.first; });
    terms_.reserve(terms.size());
    for (auto& [occ, amp] : terms) {
        if (!terms_.empty() && terms_.back().first == occ) {
            terms_.back().second += amp;
        } else {
            terms_.emplace_back(std::move(occ), amp);
        }
    }
    std::erase_if(terms_, [](const Term& t) {
        return std::abs(t.second) < kPruneThreshold;
    });
    norm_sq_ = 0.0;
    for (const auto& [occ, amp] : terms_) norm_sq_ += abs2(amp);
}

Complex StateVector::amplitude(const Occupation& occ) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), occ,
                               [](const Term& t, const Occupation& o) {
                                   return t.first < o;
                               });
    if (it != terms_.end() && it->first == occ) return it->second;
    return {0.0, 0.0};
}

double StateVector::norm() const { return std::sqrt(norm_sq_); }

bool StateVector::mode_is_vacuum(const ModeId& mode) const {
    require_mode(*this, mode);
    for (const auto& [occ, amp] : terms_)
        if (occ[mode.index] != 0) return false;
    return true;
}

StateVector StateVector::extended(const ModeRegistry& bigger) const {
    if (!registry_.is_prefix_of(bigger))
        throw UsageError("extended: registry is not a prefix of the target");
    std::vector<Term> lifted;
    lifted.reserve(terms_.size());
    for (const auto& [occ, amp] : terms_) {
        Occupation o = occ;
        o.resize(bigger.size(), 0);
        lifted.emplace_back(std::move(o), amp);
    }
    return StateVector(bigger, std::move(lifted));
}

std::string StateVector::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [occ, amp] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << "(" << amp.real() << (amp.imag() < 0 ? "-" : "+")
           << std::abs(amp.imag()) << "i)|";
        for (std::size_t i = 0; i < occ.size(); ++i) {
            if (i) os << ",";
            os << static_cast<int>(occ[i]);
        }
        os << ">";
    }
    if (first) os << "0";
    return os.str();
}

void require_mode(const StateVector& state, const ModeId& mode) {
    const auto& reg = state.registry();
    if (mode.index >= reg.size() || reg.mode(mode.index).label != mode.label)
        throw UsageError("mode '" + mode.label +
                         "' does not belong to this state's registry");
}

// ------------------------------------------------------------------- ops

StateVector vacuum(const ModeRegistry& registry) {
    if (registry.empty())
        throw ConfigError("vacuum: empty mode registry");
    return StateVector(registry,
                       {{Occupation(registry.size(), 0), Complex(1.0, 0.0)}});
}

CreateResult apply_create(const StateVector& state, const ModeId& mode) {
    require_mode(state, mode);
    const int cutoff = state.registry().n_max(mode.index);
    std::vector<Term> out;
    out.reserve(state.term_count());
    double leak = 0.0;
    for (const auto& [occ, amp] : state.terms()) {
        const int n = occ[mode.index];
        if (n + 1 > cutoff) {
            leak += abs2(amp);
            continue;
        }
        Occupation o = occ;
        o[mode.index] = static_cast<std::uint8_t>(n + 1);
        out.emplace_back(std::move(o), amp * std::sqrt(double(n + 1)));
    }
    return CreateResult{StateVector(state.registry(), std::move(out)), leak};
}

StateVector superpose(const std::vector<std::pair<Complex, StateVector>>& terms) {
    if (terms.empty())
        throw UsageError("superpose: no terms");
    const ModeRegistry& reg = terms.front().second.registry();
    std::vector<Term> out;
    for (const auto& [coeff, state] : terms) {
        if (!state.registry().same_as(reg))
            throw UsageError("superpose: registry mismatch");
        for (const auto& [occ, amp] : state.terms())
            out.emplace_back(occ, coeff * amp);
    }
    return StateVector(reg, std::move(out));
}

Complex inner(const StateVector& a, const StateVector& b) {
    if (!a.registry().same_as(b.registry()))
        throw UsageError("inner: registry mismatch");
    auto ta = a.terms();
    auto tb = b.terms();
    std::size_t i = 0, j = 0;
    Complex acc{0.0, 0.0};
    while (i < ta.size() && j < tb.size()) {
        if (ta[i].first < tb[j].first) {
            ++i;
        } else if (tb[j].first < ta[i].first) {
            ++j;
        } else {
            acc += std::conj(ta[i].second) * tb[j].second;
            ++i;
            ++j;
        }
    }
    return acc;
}

StateVector normalize(const StateVector& state) {
    const double n = state.norm();
    if (n < kZeroNormThreshold)
        throw NumericalError("normalize: state norm below zero threshold "
                             "(impossible post-selection?)");
    std::vector<Term> out(state.terms().begin(), state.terms().end());
    for (auto& [occ, amp] : out) amp /= n;
    return StateVector(state.registry(), std::move(out));
}

double occupation_probability(const StateVector& state, const ModeId& mode,
                              int n) {
    require_mode(state, mode);
    if (n < 0 || n > state.registry().n_max(mode.index))
        throw UsageError("occupation_probability: count outside truncation");
    double p = 0.0;
    for (const auto& [occ, amp] : state.terms())
        if (occ[mode.index] == n) p += abs2(amp);
    return p;
}

namespace {

Projection collapse(const StateVector& state, const ModeId& mode,
                    bool (*keep)(int occ, int n), int n) {
    std::vector<Term> kept;
    double p = 0.0;
    for (const auto& [occ, amp] : state.terms()) {
        if (keep(occ[mode.index], n)) {
            p += abs2(amp);
            kept.emplace_back(occ, amp);
        }
    }
    if (std::sqrt(p) < kZeroNormThreshold)
        throw NumericalError("projection onto a (near-)zero-probability outcome");
    StateVector collapsed(state.registry(), std::move(kept));
    return Projection{p, normalize(collapsed)};
}

} // namespace

Projection project_number(const StateVector& state, const ModeId& mode, int n) {
    require_mode(state, mode);
    if (n < 0 || n > state.registry().n_max(mode.index))
        throw UsageError("project_number: count outside truncation");
    return collapse(state, mode, [](int occ, int want) { return occ == want; }, n);
}

Projection project_occupied(const StateVector& state, const ModeId& mode) {
    require_mode(state, mode);
    return collapse(state, mode, [](int occ, int) { return occ >= 1; }, 0);
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    ModeRegistry reg = concat(a.registry(), b.registry());
    std::vector<Term> out;
    out.reserve(a.term_count() * b.term_count());
    for (const auto& [oa, va] : a.terms()) {
        for (const auto& [ob, vb] : b.terms()) {
            Occupation o = oa;
            o.insert(o.end(), ob.begin(), ob.end());
            out.emplace_back(std::move(o), va * vb);
        }
    }
    return StateVector(std::move(reg), std::move(out));
}

double fidelity(const StateVector& a, const StateVector& b) {
    if (std::abs(a.norm() - 1.0) > 1e-6 || std::abs(b.norm() - 1.0) > 1e-6)
        throw UsageError("fidelity: states must be normalized");
    return abs2(inner(a, b));
}

double reduced_fidelity(const StateVector& state, const StateVector& target) {
    if (std::abs(target.norm() - 1.0) > 1e-6)
        throw UsageError("reduced_fidelity: target must be normalized");
    const auto& sreg = state.registry();
    const auto& treg = target.registry();
    std::vector<std::uint32_t> tmap; // target slot -> state slot
    tmap.reserve(treg.size());
    for (std::size_t i = 0; i < treg.size(); ++i)
        tmap.push_back(sreg.mode(treg.mode(i).label).index);
    std::vector<bool> in_target(sreg.size(), false);
    for (auto idx : tmap) in_target[idx] = true;

    // Group amplitudes by environment configuration; each group contributes
    // |<target|psi_env>|^2 to <t|rho|t>.
    std::map<Occupation, Complex> partials;
    for (const auto& [occ, amp] : state.terms()) {
        Occupation sub(treg.size());
        for (std::size_t i = 0; i < tmap.size(); ++i) sub[i] = occ[tmap[i]];
        Complex t = target.amplitude(sub);
        if (t == Complex{0.0, 0.0}) continue;
        Occupation env;
        env.reserve(sreg.size() - treg.size());
        for (std::size_t i = 0; i < occ.size(); ++i)
            if (!in_target[i]) env.push_back(occ[i]);
        partials[env] += std::conj(t) * amp;
    }
    double f = 0.0;
    for (const auto& [env, z] : partials) f += abs2(z);
    return f;
}

} // namespace ghzw::fock
