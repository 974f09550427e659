#pragma once

#include <tfpc/csv.hpp>
#include <tfpc/pipeline.hpp>

#include <atomic>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace tfpc {

struct http_request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct http_response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct service_limits {
    std::size_t max_sessions = 32;
    std::size_t max_dataset_bytes = 64u << 20;
};

/// Per-dataset state. Requests on one session serialize on `mutex`.
struct session {
    std::string id;
    table data;
    std::mutex mutex;

    std::optional<count_settings> counted_with;
    std::optional<frequency_table> frequencies;
    std::size_t recounts = 0;

    std::optional<plot_model> model;          ///< current plot, order and brush applied
    std::vector<std::string> order;
    std::vector<brush_condition> brush;

    session(std::string id_, table t) : id(std::move(id_)), data(std::move(t)) {}
};

namespace detail {

inline http_response json_response(int status, const json& body) {
    return {status, "application/json", body.dump()};
}

inline http_response error_response(int status, const std::string& msg) {
    return json_response(status, json{{"error", msg}});
}

inline std::optional<std::string> query_value(const http_request& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end()) return std::nullopt;
    return it->second;
}

inline long long query_integer(const http_request& req, const std::string& key, long long fallback) {
    auto v = query_value(req, key);
    if (!v) return fallback;
    auto x = parse_number(*v);
    if (!x || *x != std::floor(*x)) throw invalid_argument("query parameter '" + key + "' must be an integer");
    return static_cast<long long>(*x);
}

inline bool query_flag(const http_request& req, const std::string& key) {
    auto v = query_value(req, key);
    return v && (*v == "1" || *v == "true" || v->empty());
}

inline count_settings count_settings_from(const http_request& req) {
    count_settings s;
    if (auto v = query_value(req, "columns")) s.columns = split_list(*v);
    if (auto v = query_value(req, "nlevels")) {
        for (const auto& part : split_list(*v)) {
            auto eq = part.find('=');
            auto k = parse_number(eq == std::string::npos ? part : part.substr(eq + 1));
            if (!k || *k < 2) throw invalid_argument("nlevels must be an integer >= 2");
            if (eq == std::string::npos) s.nlevels = static_cast<std::size_t>(*k);
            else s.nlevel_overrides[part.substr(0, eq)] = static_cast<std::size_t>(*k);
        }
    }
    if (auto v = query_value(req, "naexp")) {
        auto x = parse_number(*v);
        if (!x) throw invalid_argument("naexp must be a number");
        s.na_exp = *x;
        s.method = na_method::naexp;
    }
    if (auto v = query_value(req, "method")) s.method = parse_na_method(*v);
    if (auto v = query_value(req, "accentuate")) s.accentuate = parse_accentuation(*v);
    s.threads = static_cast<unsigned>(std::max(1LL, query_integer(req, "threads", 1)));
    return s;
}

} // namespace detail

/// HTTP facade over the pipeline. `handle` is transport independent; `serve`
/// binds it to a socket.
///
///   POST /datasets                      CSV body -> {"session": id}
///   GET  /sessions/{id}/plot?...        plot JSON (lines, naexp, method, nlevels,
///                                       accentuate, mode=count|density, k, locmax,
///                                       group, labels, order, columns)
///   POST /sessions/{id}/brush           JSON conditions -> plot JSON
///   POST /sessions/{id}/order           JSON axis names -> plot JSON
///   GET  /sessions/{id}/frequencies     frequency text file
///   GET  /sessions/{id}/stats           {"recounts": n, ...}
class service {
  public:
    explicit service(service_limits limits = {}) : limits_(limits) {}

    http_response handle(const http_request& req) {
        try {
            return route(req);
        } catch (const invalid_argument& e) {
            return detail::error_response(400, e.what());
        } catch (const parse_error& e) {
            return detail::error_response(400, e.what());
        } catch (const error& e) {
            return detail::error_response(422, e.what());
        } catch (const std::exception& e) {
            return detail::error_response(500, e.what());
        }
    }

    std::shared_ptr<session> find(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) return nullptr;
        lru_.splice(lru_.begin(), lru_, it->second.second);
        return it->second.first;
    }

    [[nodiscard]] std::size_t session_count() {
        std::lock_guard lock(mutex_);
        return sessions_.size();
    }

    [[nodiscard]] const service_limits& limits() const noexcept { return limits_; }

  private:
    http_response route(const http_request& req) {
        std::vector<std::string> parts;
        for (const auto& p : split_path(req.path)) parts.push_back(p);

        if (parts.size() == 1 && parts[0] == "datasets") {
            if (req.method != "POST") return detail::error_response(405, "use POST");
            return create(req);
        }
        if (parts.size() == 3 && parts[0] == "sessions") {
            auto s = find(parts[1]);
            if (!s) return detail::error_response(404, "unknown session '" + parts[1] + "'");
            std::lock_guard lock(s->mutex);
            const auto& what = parts[2];
            if (what == "plot" && req.method == "GET") return plot(*s, req);
            if (what == "brush" && req.method == "POST") return brush(*s, req);
            if (what == "order" && req.method == "POST") return order(*s, req);
            if (what == "frequencies" && req.method == "GET") return frequencies(*s, req);
            if (what == "stats" && req.method == "GET")
                return detail::json_response(200, json{{"session", s->id}, {"rows", s->data.rows()},
                                                       {"columns", s->data.cols()}, {"recounts", s->recounts}});
            return detail::error_response(404, "no route for " + req.method + " " + req.path);
        }
        return detail::error_response(404, "no route for " + req.method + " " + req.path);
    }

    static std::vector<std::string> split_path(std::string_view path) {
        std::vector<std::string> out;
        std::size_t i = 0;
        while (i < path.size()) {
            while (i < path.size() && path[i] == '/') ++i;
            auto j = path.find('/', i);
            if (j == std::string_view::npos) j = path.size();
            if (j > i) out.emplace_back(path.substr(i, j - i));
            i = j;
        }
        return out;
    }

    http_response create(const http_request& req) {
        if (req.body.size() > limits_.max_dataset_bytes)
            return detail::error_response(413, "dataset of " + std::to_string(req.body.size()) +
                                                   " bytes exceeds the cap of " +
                                                   std::to_string(limits_.max_dataset_bytes));
        csv_options opts;
        if (auto v = detail::query_value(req, "header")) opts.header = *v != "0" && *v != "false";
        auto t = load_csv(std::string_view(req.body), opts);
        std::lock_guard lock(mutex_);
        const std::string id = "s" + std::to_string(++next_id_);
        lru_.push_front(id);
        sessions_.emplace(id, std::pair{std::make_shared<session>(id, std::move(t)), lru_.begin()});
        while (sessions_.size() > limits_.max_sessions) {
            sessions_.erase(lru_.back());
            lru_.pop_back();
        }
        return detail::json_response(201, json{{"session", id}});
    }

    static const frequency_table& ensure_frequencies(session& s, const count_settings& cs) {
        if (!s.frequencies || s.counted_with != cs) {
            auto discrete = discrete_view(s.data, cs);
            s.frequencies = compute_frequencies(discrete, cs);
            s.counted_with = cs;
            ++s.recounts;
        }
        return *s.frequencies;
    }

    static void restore_view(session& s, plot_model m) {
        if (!s.order.empty()) {
            try {
                m = permute_columns(m, s.order);
            } catch (const invalid_argument&) {
                s.order.clear();
            }
        }
        if (!s.brush.empty()) {
            try {
                m = apply_brush(m, s.brush);
            } catch (const invalid_argument&) {
                s.brush.clear();
            }
        }
        s.model = std::move(m);
    }

    static http_response plot(session& s, const http_request& req) {
        const auto mode = detail::query_value(req, "mode").value_or("count");
        std::vector<std::string> order;
        if (auto v = detail::query_value(req, "order")) order = split_list(*v);
        const long long lines = detail::query_integer(req, "lines", 50);

        if (mode == "count") {
            const auto cs = detail::count_settings_from(req);
            const auto& ft = ensure_frequencies(s, cs);
            selection_settings sel;
            sel.lines = lines;
            sel.group = detail::query_value(req, "group");
            auto m = plot_frequencies(ft, sel);
            if (!order.empty()) s.order = order;
            restore_view(s, std::move(m));
        } else if (mode == "density") {
            density_settings ds;
            if (auto v = detail::query_value(req, "columns")) ds.columns = split_list(*v);
            ds.k = static_cast<std::size_t>(std::max(0LL, detail::query_integer(req, "k", 0)));
            ds.locmax = detail::query_flag(req, "locmax");
            ds.group = detail::query_value(req, "group");
            ds.lines = lines;
            ds.labels = detail::query_flag(req, "labels");
            ds.seed = static_cast<std::uint64_t>(detail::query_integer(req, "seed", 0));
            if (auto v = detail::query_value(req, "jitter")) ds.jitter = parse_number(*v).value_or(0);
            auto run = run_density(s.data, ds);
            if (!order.empty()) s.order = order;
            restore_view(s, std::move(run.model));
        } else {
            throw invalid_argument("mode must be 'count' or 'density'");
        }
        return {200, "application/json", emit_json(*s.model)};
    }

    static http_response brush(session& s, const http_request& req) {
        if (!s.model) return detail::error_response(409, "no plot yet; GET the plot first");
        json body;
        try {
            body = json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            return detail::error_response(400, std::string("malformed JSON: ") + e.what());
        }
        const json& list = body.is_object() && body.contains("conditions") ? body["conditions"] : body;
        std::vector<brush_condition> conds;
        if (list.is_object()) conds.push_back(brush_from_json(list));
        else if (list.is_array())
            for (const auto& c : list) conds.push_back(brush_from_json(c));
        else return detail::error_response(400, "brush body must be a condition or a list of conditions");
        auto cleared = clear_brush(*s.model);
        s.model = conds.empty() ? cleared : apply_brush(cleared, conds);
        s.brush = conds;
        return {200, "application/json", emit_json(*s.model)};
    }

    static http_response order(session& s, const http_request& req) {
        if (!s.model) return detail::error_response(409, "no plot yet; GET the plot first");
        json body;
        try {
            body = json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            return detail::error_response(400, std::string("malformed JSON: ") + e.what());
        }
        const json& list = body.is_object() && body.contains("order") ? body["order"] : body;
        if (!list.is_array()) return detail::error_response(400, "order body must be a list of axis names");
        std::vector<std::string> names;
        for (const auto& n : list) {
            if (!n.is_string()) return detail::error_response(400, "axis names must be strings");
            names.push_back(n.get<std::string>());
        }
        s.model = permute_columns(*s.model, names);
        s.order = names;
        return {200, "application/json", emit_json(*s.model)};
    }

    static http_response frequencies(session& s, const http_request& req) {
        const auto& ft = req.query.empty() && s.frequencies ? *s.frequencies
                                                            : ensure_frequencies(s, detail::count_settings_from(req));
        return {200, "text/tab-separated-values", export_frequencies(ft)};
    }

    service_limits limits_;
    std::mutex mutex_;
    std::list<std::string> lru_;
    std::unordered_map<std::string, std::pair<std::shared_ptr<session>, std::list<std::string>::iterator>> sessions_;
    std::size_t next_id_ = 0;
};

} // namespace tfpc
