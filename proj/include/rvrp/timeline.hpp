#pragma once

// Places a fixed visit sequence on the time axis. Fixed pause windows are
// honored unconditionally: the vehicle neither drives nor (unless the stop
// allows SPLIT mode) services during a pause, so no pause violations can
// survive this pass. Early arrivals at a time window are handled by shifting
// the whole placed prefix later within the tour-start buffer, then by
// waiting (if the vehicle may wait); windows that already closed are
// reported through tw_penalty.
//
// A shift moves every placed activity by the same amount. It is capped so
// that no previously placed window loses any of its remaining slack headroom
// (a visit that is already late caps shifting at zero) and so that no placed
// drive or service block changes how it interleaves with the fixed pauses.
// Under these caps a shift never alters the downstream schedule relative to
// plain waiting; it only converts waiting time into a later tour start.

#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "rvrp/distance.hpp"
#include "rvrp/model.hpp"

namespace rvrp {

struct ScheduledVisit {
    StopVisit visit;
    Seconds arrival = 0;
    Seconds service_start = 0;
    Seconds service_end = 0;  // includes embedded pause time for SPLIT stops
    Seconds wait_before = 0;  // idle time before service, pauses excluded
};

struct ScheduledTour {
    int vehicle = -1;
    Seconds start_time = 0;  // t_pstart
    Seconds end_time = 0;    // t_pend
    Seconds duration = 0;
    std::vector<ScheduledVisit> visits;
    std::vector<std::pair<Seconds, Seconds>> pauses;  // clipped to the tour span
    Seconds total_drive = 0;
    Seconds total_wait = 0;
    Seconds total_service = 0;
    Meters total_dist = 0;
    int distinct_locations = 0;  // #loc
    int chain_length = 0;        // cl, serviced stops
    Seconds tw_penalty = 0;      // seconds of service starts past their window end
};

namespace detail {

inline constexpr Seconds kFar = std::numeric_limits<Seconds>::max() / 4;

struct PauseAxis {
    std::vector<TimeWindow> win;  // sorted by start

    explicit PauseAxis(const std::vector<PauseRule>& rules) {
        win.reserve(rules.size());
        for (const auto& r : rules) win.push_back(r.window);
        std::sort(win.begin(), win.end(),
                  [](const TimeWindow& a, const TimeWindow& b) { return a.start < b.start; });
    }

    // pause containing t, half-open [start, end); -1 if none
    int containing(Seconds t) const {
        for (std::size_t i = 0; i < win.size(); ++i)
            if (win[i].start <= t && t < win[i].end) return static_cast<int>(i);
        return -1;
    }
    Seconds next_start_at_or_after(Seconds t) const {
        for (const auto& w : win)
            if (w.start >= t) return w.start;
        return kFar;
    }
    Seconds next_start_after(Seconds t) const {
        for (const auto& w : win)
            if (w.start > t) return w.start;
        return kFar;
    }
    Seconds overlap_with(Seconds a, Seconds b) const {
        Seconds o = 0;
        for (const auto& w : win)
            o += std::max<Seconds>(0, std::min(b, w.end) - std::max(a, w.start));
        return o;
    }
};

// Drives for `secs` starting at t; rests through any pause hit on the way.
// Returns the arrival and the instant the leg first got blocked by a pause
// (-1 if none). A leg blocked right at its departure is pinned: the true
// departure is the pause end, so the leg tolerates no shift at all.
inline std::pair<Seconds, Seconds> advance_drive(const PauseAxis& pauses, Seconds t, Seconds secs) {
    Seconds first_blocked = -1;
    while (true) {
        if (secs == 0) return {t, first_blocked};
        const int in = pauses.containing(t);
        if (in >= 0) {
            if (first_blocked < 0) first_blocked = t;
            t = pauses.win[in].end;
            continue;
        }
        const Seconds ps = pauses.next_start_after(t);
        const Seconds gap = ps - t;
        if (secs <= gap) return {t + secs, first_blocked};
        secs -= gap;
        t = ps;
    }
}

// Service placement around pauses. For SPLIT stops the pause is embedded in
// the service interval; otherwise the full service is deferred past it.
// Returns (service_start, service_end, start of first embedded pause or -1).
struct PlacedService {
    Seconds start = 0;
    Seconds end = 0;
    Seconds first_embedded = -1;
};

inline PlacedService place_service(const PauseAxis& pauses, Seconds cand, Seconds eff, bool split) {
    if (eff == 0) return {cand, cand, -1};
    if (split) {
        PlacedService out;
        out.start = cand;
        Seconds cur = cand;
        Seconds rem = eff;
        while (true) {
            const int in = pauses.containing(cur);
            if (in >= 0) {
                if (out.first_embedded < 0) out.first_embedded = pauses.win[in].start;
                cur = pauses.win[in].end;
                continue;
            }
            const Seconds ps = pauses.next_start_after(cur);
            const Seconds step = std::min(rem, ps - cur);
            cur += step;
            rem -= step;
            if (rem == 0) break;
        }
        out.end = cur;
        return out;
    }
    while (true) {
        const int in = pauses.containing(cand);
        if (in >= 0) {
            cand = pauses.win[in].end;
            continue;
        }
        const Seconds ps = pauses.next_start_after(cand);
        if (ps < cand + eff) {
            cand = ps;  // loops into the containing() branch, defers past it
            continue;
        }
        return {cand, cand + eff, -1};
    }
}

}  // namespace detail

inline Seconds effective_service_duration(const Stop& stop, const Vehicle& veh) {
    if (!veh.fast_loading || stop.fast_loading_modifier <= 0.0) return stop.service_duration;
    return std::llround(static_cast<double>(stop.service_duration) *
                        (1.0 - stop.fast_loading_modifier));
}

inline ScheduledTour schedule_tour(const Problem& p, const TravelMatrix& matrix, int vehicle,
                                   const Chain& chain) {
    const Vehicle& veh = p.inst->vehicles[vehicle];
    const detail::PauseAxis pauses(p.inst->pause_rules);

    ScheduledTour tour;
    tour.vehicle = vehicle;
    if (chain.empty()) return tour;

    Seconds buffer = veh.tour_start_window.length();
    Seconds window_cap = detail::kFar;  // min remaining slack of placed windowed visits
    Seconds pause_cap = detail::kFar;   // max shift keeping pause interleaving intact

    tour.start_time = veh.tour_start_window.start;
    Seconds t = tour.start_time;
    int cur_loc = p.loc_of(chain.front());

    tour.visits.push_back({chain.front(), t, t, t, 0});

    auto shift_all = [&](Seconds delta) {
        for (auto& sv : tour.visits) {
            sv.arrival += delta;
            sv.service_start += delta;
            sv.service_end += delta;
        }
        tour.start_time += delta;
        buffer -= delta;
        if (window_cap < detail::kFar) window_cap -= delta;
        if (pause_cap < detail::kFar) pause_cap -= delta;
    };

    for (std::size_t i = 1; i < chain.size(); ++i) {
        const StopVisit visit = chain[i];
        const Stop& stop = p.stops[visit.stop];
        const int loc = p.loc_of(visit);

        const Seconds drive = matrix.t(cur_loc, loc);
        tour.total_dist += matrix.d(cur_loc, loc);
        tour.total_drive += drive;

        const Seconds leave = t;
        auto [arrival, first_blocked] = detail::advance_drive(pauses, leave, drive);
        if (drive > 0) {
            if (first_blocked >= 0)
                pause_cap = std::min(pause_cap, first_blocked - leave);
            pause_cap = std::min(pause_cap, pauses.next_start_at_or_after(arrival) - arrival);
        }

        Seconds cand = arrival;
        const Seconds eff = effective_service_duration(stop, veh);

        if (stop.tw && cand < stop.tw->start) {
            const Seconds want = stop.tw->start - cand;
            const Seconds delta =
                std::max<Seconds>(0, std::min({want, buffer, window_cap, pause_cap}));
            if (delta > 0) {
                shift_all(delta);
                t += delta;
                arrival += delta;
                cand += delta;
            }
            if (cand < stop.tw->start && veh.can_wait) cand = stop.tw->start;
            // otherwise served early; the earliness shows up in S1
        }

        const auto placed = detail::place_service(pauses, cand, eff, stop.split_allowed);

        if (eff > 0) {
            if (placed.first_embedded >= 0)
                pause_cap = std::min(pause_cap, placed.first_embedded - placed.start);
            pause_cap = std::min(pause_cap,
                                 pauses.next_start_at_or_after(placed.end) - placed.end);
        }
        if (stop.tw)
            window_cap = std::min(window_cap,
                                  std::max<Seconds>(0, stop.tw->end - placed.start));

        tour.visits.push_back({visit, arrival, placed.start, placed.end, 0});
        tour.total_service += eff;
        t = placed.end;
        cur_loc = loc;
    }

    tour.end_time = tour.visits.back().service_end;
    tour.duration = tour.end_time - tour.start_time;

    std::set<int> locs;
    for (std::size_t i = 0; i < tour.visits.size(); ++i) {
        auto& sv = tour.visits[i];
        locs.insert(p.loc_of(sv.visit));
        if (p.is_service_stop(sv.visit.stop)) ++tour.chain_length;
        const Seconds gap = sv.service_start - sv.arrival;
        sv.wait_before = gap - pauses.overlap_with(sv.arrival, sv.service_start);
        tour.total_wait += sv.wait_before;
        const Stop& stop = p.stops[sv.visit.stop];
        if (stop.tw && sv.service_start > stop.tw->end)
            tour.tw_penalty += sv.service_start - stop.tw->end;
    }
    tour.distinct_locations = static_cast<int>(locs.size());

    for (const auto& w : pauses.win)
        if (w.start < tour.end_time && w.end > tour.start_time)
            tour.pauses.emplace_back(std::max(w.start, tour.start_time),
                                     std::min(w.end, tour.end_time));
    return tour;
}

}  // namespace rvrp
