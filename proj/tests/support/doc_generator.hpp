#pragma once

// Random valid LapisDocument generator for round-trip properties. Every
// document it returns passes validate() with zero errors; a fixed seed gives
// a fixed document on every platform (the engine is mt19937_64 and only its
// raw output is consumed, never <random> distributions).

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lapis/model.hpp"

namespace lapis::test {

class DocGenerator {
public:
    explicit DocGenerator(std::uint64_t seed) : rng_(seed) {}

    LapisDocument generate() {
        LapisDocument doc;
        doc.meta = meta();
        int type_count = below(6);
        for (int i = 0; i < type_count; ++i) type_names_.push_back(fmt_name("T", i));
        for (const auto& name : type_names_) doc.types.push_back(type_def(name));
        int op_count = below(6);
        for (int i = 0; i < op_count; ++i) doc.ops.push_back(operation(i));
        int hook_count = below(3);
        for (int i = 0; i < hook_count; ++i) doc.webhooks.push_back(webhook(i));
        if (chance(2)) doc.errors = errors(doc);
        if (chance(2)) doc.limits = limits();
        std::vector<std::string> steps;
        for (const auto& op : doc.ops) steps.push_back(op.name);
        for (const auto& w : doc.webhooks) steps.push_back(w.name);
        if (!steps.empty()) {
            int flow_count = below(3);
            for (int i = 0; i < flow_count; ++i) doc.flows.push_back(flow(i, steps));
        }
        reset();
        return doc;
    }

private:
    std::mt19937_64 rng_;
    std::vector<std::string> type_names_;
    std::vector<std::string> enum_names_;

    void reset() {
        type_names_.clear();
        enum_names_.clear();
    }

    int below(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
    bool chance(int one_in) { return below(one_in) == 0; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(below(static_cast<int>(v.size())))];
    }

    static std::string fmt_name(const char* prefix, int i) { return std::string(prefix) + std::to_string(i) + "Kind"; }

    std::string word() {
        static const std::vector<std::string> words{
            "invoice", "customer", "status", "returns", "the", "item", "list", "of", "pets", "when", "paid",
            "échéance", "日本", "v2.1", "a#b", "100%", "{id}", "x:y", "--flag", "\"quoted\"", "back\\slash",
            "[tag]", "|pipe|", "->", "...", "(note)", "*star", "@at", "=eq", "<lt", ">gt", "~tilde", "!bang", "?q"};
        return pick(words);
    }

    // Single trimmed line; the first word is always plain.
    std::string prose() {
        static const std::vector<std::string> starts{"Creates", "Returns", "When", "Fires", "Deletes", "Note",
                                                     "Ünicode", "3 items", "[draft]", "{x}", "\"Quoted\"", "+plus"};
        std::string s = pick(starts);
        int n = below(6);
        for (int i = 0; i < n; ++i) s += " " + word();
        return s;
    }

    std::string free_text() {
        // Quoted contexts: anything without line breaks, including escapes and '#'.
        static const std::vector<std::string> texts{"", "monthly requests", "say \"hi\"", "back\\slash",
                                                    "hash # inside", "  padded  ", "use v2 instead", "ümlaut"};
        return pick(texts);
    }

    std::string snake(const char* prefix, int i) { return std::string(prefix) + "_" + std::to_string(i); }

    std::string token() {
        static const std::vector<std::string> tokens{"key", "ip", "user", "org-wide", "v1.2", "retry_after", "x.y"};
        return pick(tokens);
    }

    Meta meta() {
        Meta m;
        static const std::vector<std::string> apis{"Invoice Service", "Pet Store", "X", "Ünïcode API #1",
                                                   "Name: with colon"};
        m.api = pick(apis);
        m.base = chance(4) ? "/api/v" + std::to_string(below(4)) : "https://api" + std::to_string(below(9)) + ".example.com/v2";
        if (chance(2)) m.version = std::to_string(below(4)) + "." + std::to_string(below(10)) + ".0";
        if (chance(2)) m.desc = prose();
        switch (below(5)) {
            case 0: m.auth = {AuthScheme::none, std::nullopt, std::nullopt}; break;
            case 1: m.auth = {AuthScheme::bearer, CredentialLocation::header, "Authorization"}; break;
            case 2: m.auth = {AuthScheme::apikey, CredentialLocation::query, "api_key"}; break;
            case 3: m.auth = {AuthScheme::basic, std::nullopt, std::nullopt}; break;
            default: m.auth = {AuthScheme::oauth2, CredentialLocation::cookie, "session"}; break;
        }
        return m;
    }

    TypeExpr type_expr(int depth = 0) {
        int roll = below(depth >= 2 ? 8 : 11);
        if (roll < 6 || (roll < 8 && type_names_.empty())) {
            static const std::vector<ScalarKind> kinds{ScalarKind::str,  ScalarKind::int_,     ScalarKind::float_,
                                                       ScalarKind::bool_, ScalarKind::date, ScalarKind::datetime,
                                                       ScalarKind::file, ScalarKind::any};
            return TypeExpr::scalar(pick(kinds));
        }
        if (roll < 8) return TypeExpr::named(pick(type_names_));
        if (roll < 10) return TypeExpr::array(type_expr(depth + 1));
        return TypeExpr::map(type_expr(depth + 1));
    }

    std::optional<Literal> default_for(const TypeExpr& t) {
        using K = Literal::Kind;
        if (const auto* s = std::get_if<ScalarType>(&t.node)) {
            switch (s->kind) {
                case ScalarKind::str:
                case ScalarKind::date:
                case ScalarKind::datetime:
                    if (chance(2)) return Literal{K::string, free_text()};
                    return Literal{K::bare, token()};
                case ScalarKind::int_: return Literal{K::integer, std::to_string(below(2000) - 1000)};
                case ScalarKind::float_:
                    return chance(2) ? Literal{K::number, std::to_string(below(100)) + ".5"} : Literal{K::number, "-2.5e3"};
                case ScalarKind::bool_: return Literal{K::boolean, chance(2) ? "true" : "false"};
                case ScalarKind::any: return Literal{K::integer, "0"};
                case ScalarKind::file: return std::nullopt;
            }
        }
        return std::nullopt;
    }

    Field field(std::string name) {
        Field f;
        f.name = std::move(name);
        f.type = type_expr();
        f.optional = chance(3);
        if (chance(4)) f.default_value = default_for(f.type);
        if (chance(5)) f.since = token();
        if (chance(6)) f.deprecated = free_text();
        return f;
    }

    std::vector<Field> fields(int max, const char* prefix) {
        std::vector<Field> out;
        int n = below(max + 1);
        for (int i = 0; i < n; ++i) out.push_back(field(snake(prefix, i)));
        return out;
    }

    TypeDef type_def(const std::string& name) {
        if (chance(3)) {
            static const std::vector<std::string> variants{"draft", "sent", "in-progress", "v1.2", "2xx", "a:b",
                                                           "two words", "ÉTÉ", "*", "x=y"};
            EnumBody e;
            int n = 1 + below(5);
            for (int i = 0; i < n; ++i) {
                std::string v = pick(variants);
                if (std::find(e.variants.begin(), e.variants.end(), v) == e.variants.end()) e.variants.push_back(v);
            }
            enum_names_.push_back(name);
            return {name, e};
        }
        return {name, ObjectBody{fields(5, "f")}};
    }

    Param param(std::string name, ParamLocation inferred) {
        Param p;
        p.name = std::move(name);
        p.type = type_expr();
        p.optional = chance(3);
        if (chance(5)) p.default_value = default_for(p.type);
        static const std::vector<ParamLocation> locs{ParamLocation::query, ParamLocation::body, ParamLocation::header};
        p.location = pick(locs);
        p.location_explicit = p.location != inferred || chance(4);
        if (p.location_explicit && chance(3)) p.wire_name = "X-" + std::to_string(below(100)) + "-Wire";
        return p;
    }

    Operation operation(int i) {
        static const std::vector<HttpMethod> methods{HttpMethod::get,    HttpMethod::post, HttpMethod::put,
                                                     HttpMethod::patch,  HttpMethod::delete_, HttpMethod::head,
                                                     HttpMethod::options};
        Operation op;
        op.name = snake("op", i);
        op.method = pick(methods);
        op.path = "/r" + std::to_string(i);
        int route_params = below(3);
        for (int k = 0; k < route_params; ++k) {
            Param p;
            p.type = chance(2) ? TypeExpr::scalar(ScalarKind::str) : TypeExpr::scalar(ScalarKind::int_);
            p.location = ParamLocation::path;
            if (chance(3)) {
                p.name = snake("pid", k);
                p.location_explicit = true;
                p.wire_name = "pathVar" + std::to_string(k);
                op.path += "/{" + *p.wire_name + "}";
            } else {
                p.name = snake("id", k);
                p.location_explicit = chance(4);
                op.path += "/{" + p.name + "}";
            }
            op.inputs.push_back(std::move(p));
            if (chance(2)) op.path += "/sub-" + std::to_string(k);
        }
        int desc_lines = below(3);
        for (int k = 0; k < desc_lines; ++k) op.desc.push_back(prose());
        int extra = below(4);
        for (int k = 0; k < extra; ++k) op.inputs.push_back(param(snake("in", k), default_location(op.method)));
        for (int k = static_cast<int>(op.inputs.size()) - 1; k > 0; --k) {
            std::swap(op.inputs[static_cast<std::size_t>(k)], op.inputs[static_cast<std::size_t>(below(k + 1))]);
        }
        switch (below(3)) {
            case 0: break;
            case 1: op.output = type_expr(); break;
            default: {
                ObjectBody body{fields(3, "out")};
                if (body.fields.empty()) body.fields.push_back(field("ok"));
                op.output = std::move(body);
            }
        }
        op.modifiers = {chance(3), chance(3), chance(4), chance(5)};
        return op;
    }

    Webhook webhook(int i) {
        Webhook w;
        w.name = snake("hook", i);
        w.method = chance(4) ? HttpMethod::put : HttpMethod::post;
        w.path = "/webhooks/event-" + std::to_string(i);
        w.trigger = chance(5) ? "" : prose();
        int n = below(4);
        for (int k = 0; k < n; ++k) {
            Param p;
            p.name = snake("field", k);
            p.type = type_expr();
            p.optional = chance(3);
            if (chance(3)) {
                p.location = ParamLocation::header;
                p.location_explicit = true;
                if (chance(2)) p.wire_name = "X-Event-" + std::to_string(k);
            } else {
                p.location = ParamLocation::body;
                p.location_explicit = chance(5);
            }
            w.payload.push_back(std::move(p));
        }
        return w;
    }

    ErrorSection errors(const LapisDocument& doc) {
        ErrorSection e;
        if (!type_names_.empty() && chance(2)) e.base_type = pick(type_names_);
        static const std::vector<std::string> labels{"not_found", "unauthorized", "conflict", "rate_limited", "oops"};
        int n = (e.base_type ? 0 : 1) + below(5);
        std::set<std::pair<int, std::string>> used;
        for (int k = 0; k < n; ++k) {
            ErrorDef d;
            d.code = 400 + below(200);
            d.label = pick(labels);
            if (!used.insert({d.code, d.label}).second) continue;
            if (!chance(4)) d.desc = prose();
            if (!doc.ops.empty() && chance(3)) {
                for (const auto& op : doc.ops) {
                    if (chance(2)) d.ops.push_back(op.name);
                }
            }
            d.extra_fields = fields(2, "extra");
            e.entries.push_back(std::move(d));
        }
        return e;
    }

    RateSpec rate() {
        static const std::vector<RatePeriod> periods{RatePeriod::second, RatePeriod::minute, RatePeriod::hour,
                                                     RatePeriod::day, RatePeriod::month};
        RateSpec r;
        r.amount = 1 + rng_() % 100000;
        r.period = pick(periods);
        if (chance(2)) r.scope = token();
        if (chance(3)) r.note = free_text();
        return r;
    }

    LimitsSection limits() {
        LimitsSection l;
        if (chance(2)) l.on_exceed = OnExceed{429, token()};
        int n = (l.on_exceed ? 0 : 1) + below(3);
        for (int k = 0; k < n; ++k) {
            Plan p;
            p.name = "plan-" + std::to_string(k);
            int rates = below(3);
            for (int j = 0; j < rates; ++j) p.rates.push_back(rate());
            int quotas = below(2);
            for (int j = 0; j < quotas; ++j) p.quotas.push_back(rate());
            l.plans.push_back(std::move(p));
        }
        return l;
    }

    FlowExpr atom(const std::vector<std::string>& steps) {
        if (chance(5)) {
            static const std::vector<std::string> labels{"awaiting payment", "", "x -> y | z", " spaced ", "(nested"};
            return FlowExpr::wait(pick(labels));
        }
        return FlowExpr::step(pick(steps), chance(3));
    }

    FlowExpr element(const std::vector<std::string>& steps) {
        if (chance(4)) {
            std::vector<FlowExpr> arms;
            int n = 2 + below(2);
            for (int i = 0; i < n; ++i) arms.push_back(atom(steps));
            return FlowExpr::branch(std::move(arms));
        }
        return atom(steps);
    }

    Flow flow(int i, const std::vector<std::string>& steps) {
        Flow f;
        f.name = snake("flow", i);
        if (chance(2)) f.title = free_text();
        if (chance(4)) {
            f.expr = element(steps);
        } else {
            std::vector<FlowExpr> seq;
            int n = 2 + below(6);
            for (int k = 0; k < n; ++k) seq.push_back(element(steps));
            f.expr = FlowExpr::seq(std::move(seq));
        }
        std::vector<std::string> used;
        collect_flow_steps(f.expr, used);
        if (!used.empty()) {
            int n = below(3);
            for (int k = 0; k < n; ++k) f.conditions.push_back({pick(used), prose()});
        }
        return f;
    }
};

}  // namespace lapis::test
