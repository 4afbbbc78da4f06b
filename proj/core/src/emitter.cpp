#include "lapis/emitter.hpp"

#include <fmt/format.h>

namespace lapis {

namespace {

class Writer {
public:
    explicit Writer(const EmitStyle& style) : unit_(static_cast<std::size_t>(style.indent_width), ' ') {}

    void line(int depth, std::string_view text) {
        for (int i = 0; i < depth; ++i) out_ += unit_;
        out_ += text;
        out_ += '\n';
    }
    void blank() { out_ += '\n'; }
    std::string take() { return std::move(out_); }
    std::size_t indent_size(int depth) const { return unit_.size() * static_cast<std::size_t>(depth); }

private:
    std::string unit_;
    std::string out_;
};

std::string field_text(const Field& f) {
    std::string s = f.name;
    if (f.optional) s += '?';
    s += ": ";
    s += emit_type_expr(f.type);
    if (f.default_value) s += " = " + emit_literal(*f.default_value);
    if (f.since) s += " @since:" + *f.since;
    if (f.deprecated) {
        s += " @deprecated";
        if (!f.deprecated->empty()) s += " " + quote(*f.deprecated);
    }
    return s;
}

std::string param_text(const Param& p) {
    std::string s = p.name;
    if (p.optional) s += '?';
    s += ": ";
    s += emit_type_expr(p.type);
    if (p.default_value) s += " = " + emit_literal(*p.default_value);
    if (p.location_explicit) {
        s += " @";
        s += to_string(p.location);
        if (p.wire_name) s += ":" + *p.wire_name;
    }
    return s;
}

std::string rate_text(std::string_view kind, const RateSpec& r) {
    std::string s = fmt::format("{}: {}/{}", kind, r.amount, to_string(r.period));
    if (r.scope) s += " @" + *r.scope;
    if (r.note) s += " " + quote(*r.note);
    return s;
}

std::string flow_atom(const FlowExpr& e);

std::string flow_alternatives(const FlowExpr& e) {
    if (const auto* b = std::get_if<FlowBranch>(&e.node)) {
        std::string s;
        for (std::size_t i = 0; i < b->arms.size(); ++i) {
            if (i > 0) s += " | ";
            s += flow_atom(b->arms[i]);
        }
        return s;
    }
    return flow_atom(e);
}

std::string flow_atom(const FlowExpr& e) {
    if (const auto* step = std::get_if<FlowStep>(&e.node)) return step->repeated ? step->name + "*" : step->name;
    if (const auto* wait = std::get_if<FlowWait>(&e.node)) return "...(" + wait->label + ")";
    return flow_alternatives(e);
}

std::vector<std::string> flow_elements(const FlowExpr& e) {
    std::vector<std::string> out;
    if (const auto* seq = std::get_if<FlowSeq>(&e.node)) {
        for (const auto& s : seq->steps) out.push_back(flow_alternatives(s));
    } else {
        out.push_back(flow_alternatives(e));
    }
    return out;
}

std::string emit_meta(const Meta& m, const EmitStyle& style) {
    Writer w(style);
    w.line(0, "[meta]");
    w.line(0, "api: " + m.api);
    w.line(0, "base: " + m.base);
    if (m.version) w.line(0, "version: " + *m.version);
    if (m.desc) w.line(0, "desc: " + *m.desc);
    w.line(0, "auth: " + emit_auth(m.auth));
    return w.take();
}

std::string emit_types(const std::vector<TypeDef>& types, const EmitStyle& style) {
    if (types.empty()) return {};
    Writer w(style);
    w.line(0, "[types]");
    for (const auto& t : types) {
        if (const auto* e = std::get_if<EnumBody>(&t.body)) {
            std::string s = t.name + ":";
            for (std::size_t i = 0; i < e->variants.size(); ++i) s += (i == 0 ? " " : " | ") + e->variants[i];
            w.line(0, s);
        } else {
            w.line(0, t.name + ":");
            for (const auto& f : std::get<ObjectBody>(t.body).fields) w.line(1, field_text(f));
        }
    }
    return w.take();
}

std::string emit_ops(const std::vector<Operation>& ops, const EmitStyle& style) {
    Writer w(style);
    w.line(0, "[ops]");
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const Operation& op = ops[i];
        if (i > 0 && style.blank_line_between_ops) w.blank();
        std::string head = fmt::format("{} {} {}", op.name, to_string(op.method), op.path);
        if (op.modifiers.paginated) head += " +paginated";
        if (op.modifiers.idempotent) head += " +idempotent";
        if (op.modifiers.stream) head += " +stream";
        if (op.modifiers.deprecated) head += " +deprecated";
        w.line(0, head);
        for (const auto& d : op.desc) w.line(1, d);
        for (const auto& p : op.inputs) w.line(1, "> " + param_text(p));
        if (op.output) {
            if (const auto* t = std::get_if<TypeExpr>(&*op.output)) {
                w.line(1, "< " + emit_type_expr(*t));
            } else {
                for (const auto& f : std::get<ObjectBody>(*op.output).fields) w.line(1, "< " + field_text(f));
            }
        }
    }
    return w.take();
}

std::string emit_webhooks(const std::vector<Webhook>& hooks, const EmitStyle& style) {
    if (hooks.empty()) return {};
    Writer w(style);
    w.line(0, "[webhooks]");
    for (const auto& h : hooks) {
        w.line(0, fmt::format("{} -> {} {}", h.name, to_string(h.method), h.path));
        if (!h.trigger.empty()) w.line(1, "! " + h.trigger);
        for (const auto& p : h.payload) w.line(1, "< " + param_text(p));
    }
    return w.take();
}

std::string emit_errors(const std::optional<ErrorSection>& errors, const EmitStyle& style) {
    if (!errors || (!errors->base_type && errors->entries.empty())) return {};
    Writer w(style);
    w.line(0, "[errors]");
    if (errors->base_type) w.line(0, "# Base structure: " + *errors->base_type);
    for (const auto& e : errors->entries) {
        std::string head = fmt::format("{} {}", e.code, e.label);
        for (std::size_t i = 0; i < e.ops.size(); ++i) head += (i == 0 ? " @ops:" : ",") + e.ops[i];
        w.line(0, head);
        if (!e.desc.empty()) w.line(1, e.desc);
        for (const auto& f : e.extra_fields) w.line(1, "~ " + field_text(f));
    }
    return w.take();
}

std::string emit_limits(const std::optional<LimitsSection>& limits, const EmitStyle& style) {
    if (!limits || (!limits->on_exceed && limits->plans.empty())) return {};
    Writer w(style);
    w.line(0, "[limits]");
    if (limits->on_exceed) w.line(0, fmt::format("on_exceed: {} {}", limits->on_exceed->code, limits->on_exceed->behavior));
    for (const auto& p : limits->plans) {
        w.line(0, "plan: " + p.name);
        for (const auto& r : p.rates) w.line(1, rate_text("rate", r));
        for (const auto& q : p.quotas) w.line(1, rate_text("quota", q));
    }
    return w.take();
}

std::string emit_flows(const std::vector<Flow>& flows, const EmitStyle& style) {
    if (flows.empty()) return {};
    Writer w(style);
    w.line(0, "[flows]");
    for (const auto& f : flows) {
        w.line(0, f.title ? f.name + " " + quote(*f.title) : f.name);
        auto elements = flow_elements(f.expr);
        std::string current = elements.front();
        int depth = 1;
        for (std::size_t i = 1; i < elements.size(); ++i) {
            std::string candidate = current + " -> " + elements[i];
            if (style.max_line && w.indent_size(depth) + candidate.size() > static_cast<std::size_t>(*style.max_line)) {
                w.line(depth, current);
                current = "-> " + elements[i];
                depth = 2;
            } else {
                current = std::move(candidate);
            }
        }
        w.line(depth, current);
        for (const auto& c : f.conditions) w.line(1, fmt::format("? {}: {}", c.branch, c.prose));
    }
    return w.take();
}

std::string error_summary(const std::vector<Diagnostic>& diagnostics) {
    std::string s = "document has validation errors";
    for (const auto& d : diagnostics) {
        if (d.severity == Severity::error) {
            s += fmt::format("; {} [{}]", d.message, d.code);
        }
    }
    return s;
}

}  // namespace

EmitError::EmitError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(error_summary(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string quote(std::string_view text) {
    std::string s = "\"";
    for (char c : text) {
        if (c == '"' || c == '\\') s += '\\';
        s += c;
    }
    s += '"';
    return s;
}

std::string emit_type_expr(const TypeExpr& type) {
    return std::visit(
        [](const auto& node) -> std::string {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, ScalarType>) return std::string(to_string(node.kind));
            else if constexpr (std::is_same_v<T, NamedType>) return node.name;
            else if constexpr (std::is_same_v<T, ArrayType>) return "[" + emit_type_expr(*node.element) + "]";
            else return "{str:" + emit_type_expr(*node.value) + "}";
        },
        type.node);
}

std::string emit_literal(const Literal& literal) {
    return literal.kind == Literal::Kind::string ? quote(literal.text) : literal.text;
}

std::string emit_auth(const AuthSpec& auth) {
    std::string s(to_string(auth.scheme));
    if (auth.location && auth.name) s += fmt::format(" {}:{}", to_string(*auth.location), *auth.name);
    return s;
}

std::string emit_flow_expr(const FlowExpr& expr) {
    auto elements = flow_elements(expr);
    std::string s = elements.front();
    for (std::size_t i = 1; i < elements.size(); ++i) s += " -> " + elements[i];
    return s;
}

EmittedSections emit_sections(const LapisDocument& doc, const EmitStyle& style) {
    if (style.indent_width < 1) throw std::invalid_argument("indent_width must be at least 1");
    auto diagnostics = validate(doc);
    if (has_errors(diagnostics)) throw EmitError(std::move(diagnostics));
    return {
        emit_meta(doc.meta, style),     emit_types(doc.types, style),   emit_ops(doc.ops, style),
        emit_webhooks(doc.webhooks, style), emit_errors(doc.errors, style), emit_limits(doc.limits, style),
        emit_flows(doc.flows, style),
    };
}

std::string emit_document(const LapisDocument& doc, const EmitStyle& style) {
    return emit_sections(doc, style).joined();
}

}  // namespace lapis
