#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rovella/combinatorics.hpp"
#include "rovella/family.hpp"
#include "rovella/orbit.hpp"

namespace rovella {

struct ReturnRecord {
    int gamma = 0;
    int m = 0;
    int k = 0;
    bool essential = false;
    bool escape = false;
    int p = 0;
};

// persistent list, children share the history of their parent
class ReturnList {
public:
    void push(const ReturnRecord& r);
    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    const ReturnRecord& back() const { return head_->r; }
    bool has_deep() const { return deep_ > 0; }
    std::vector<ReturnRecord> to_vector() const;  // increasing gamma

private:
    struct Node {
        ReturnRecord r;
        std::shared_ptr<const Node> prev;
    };
    std::shared_ptr<const Node> head_;
    std::size_t size_ = 0;
    int deep_ = 0;
};

struct ParamInterval {
    double lo = 0, hi = 0;
    double xlo = 0, xhi = 0;  // xi_n^+ at the endpoints, n = generation
    ReturnList returns;
    int generation = 0;
    long id = 0;
    long parent = -1;
    int bound_until = 0;
    bool escape_pending = false;  // escape component waiting for its next return

    double length() const { return hi - lo; }
};

struct Generation {
    int n = 0;
    std::vector<ParamInterval> intervals;
    double excluded_measure = 0;
    double quarantined_measure = 0;
    double survivor_measure = 0;
    int escapes = 0;
    int count = 0;
    int bound_steps = 0, free_steps = 0, inessential = 0, essential = 0;
};

struct CheckRecord {
    std::string id;
    int n = 0;
    double value = 0;
    double bound = 0;
    double margin = 0;
    bool pass = true;
    int count = 1;  // checks summarized by this record
};

struct EscapeEvent {
    long id = 0;
    double lo = 0, hi = 0;
    int theta = 0;
    int side = 1;  // +1: image on [delta, 1]
    std::optional<int> next_return;
    double next_image_length = 0;
};

enum class PieceStatus { kept, excluded, quarantined };

struct Piece {
    double lo = 0, hi = 0;
    PieceStatus status = PieceStatus::kept;
    const char* reason = "";
};

struct RefineOptions {
    int threads = 1;
    int screen_points = 64;
    int check_candidates = 10;  // deep children sampled for the bound-period checks
    double slack = 0.5;
};

struct RefineResult {
    Generation next;
    std::vector<Piece> pieces;
    std::vector<CheckRecord> checks;
    std::vector<EscapeEvent> new_escapes;
    std::vector<std::pair<long, std::pair<int, double>>> escape_returns;  // id -> (gamma, image length)
};

// one generation step n-1 -> n; `next_id` supplies fresh interval ids
RefineResult refine_step(const FamilyParams& fp, const Generation& prev, const ConstantsBundle& b, long& next_id,
                         const RefineOptions& opt = {});

// removes intervals with F_n < (1 - alpha) n at one of `samples` parameters
Generation apply_FA_filter(const FamilyParams& fp, const Generation& gen, const ConstantsBundle& b, int samples = 9,
                           int threads = 1);

struct InductionOptions {
    std::optional<std::pair<double, double>> a_range;
    std::uint64_t seed = 1;
    int threads = 1;
    int check_budget = 1000;
    bool keep_all = false;
    double slack = 0.5;
    std::size_t escape_log = 4096;  // escape events kept in detail
};

struct InductionRun {
    ConstantsBundle bundle;
    InitialInterval init;
    double a_lo = 0, a_hi = 0;
    int n_max = 0;
    std::vector<Generation> generations;  // intervals kept for the last one unless keep_all
    std::vector<CheckRecord> checks;
    std::vector<EscapeEvent> escapes;  // the first escape_log events
    long escapes_total = 0;
    double cumulative_excluded = 0;
    double quarantined = 0;
    double max_bookkeeping_error = 0;
    bool terminated_early = false;
    std::string diagnostics;

    const Generation& last() const { return generations.back(); }
    bool all_pass(const std::string& id) const;
    int count(const std::string& id) const;
};

// fills A, c, lambda_c, N, N0, N1, a0 of the bundle
ConstantsBundle calibrate_bundle(const FamilyParams& fp, ConstantsBundle b, int n_max, std::uint64_t seed,
                                 InitialInterval* init = nullptr);

InductionRun run_induction(const FamilyParams& fp, const ConstantsBundle& b, int n_max,
                           const InductionOptions& opt = {});

// a with |xi_n^+(a) - target| <= 1e-12 on [lo, hi]
double invert_critical_map(const FamilyParams& fp, double lo, double hi, int n, double target,
                           int screen_points = 64);

struct Deviation {
    int n = 0;
    int T = 0;
    int F = 0;
    bool inequality_holds = true;  // n - T >= F
};

Deviation deviation_statistic(const FamilyParams& fp, double a, int n, const ConstantsBundle& b);

void save_run(const InductionRun& run, const std::string& dir);

}  // namespace rovella
