#include <doctest.h>

#include <algorithm>

#include "lapis/parser.hpp"
#include "test_support.hpp"

using namespace lapis;

namespace {

const char* kMinimal = "[meta]\napi: X\nbase: https://a.b\nauth: none\n[ops]\nping GET /ping\n  < ok: bool\n";

std::string codes(const ParseResult& r) {
    std::string s;
    for (const auto& d : r.diagnostics) s += d.code + " ";
    return s;
}

bool has_code(const ParseResult& r, std::string_view code) {
    return std::any_of(r.diagnostics.begin(), r.diagnostics.end(), [&](const Diagnostic& d) { return d.code == code; });
}

LapisDocument parse_ok(const std::string& text) {
    auto r = parse_document(text);
    INFO(codes(r));
    REQUIRE(r.ok());
    return *r.document;
}

Field field(std::string name, TypeExpr t, bool optional = false) {
    return {std::move(name), std::move(t), optional, std::nullopt, std::nullopt, std::nullopt};
}

}  // namespace

TEST_CASE("invoice-service document") {
    auto doc = parse_ok(test::read_file(test::fixture_path("invoice_service.lapis")));

    CHECK(doc.meta.api == "Invoice Service");
    CHECK(doc.meta.base == "https://api.example.com/v2");
    CHECK(doc.meta.version == "2.1.0");
    CHECK(doc.meta.desc == "Invoice, customer, and payment management");
    CHECK(doc.meta.auth == AuthSpec{AuthScheme::bearer, CredentialLocation::header, "Authorization"});

    REQUIRE(doc.types.size() >= 2);
    const TypeDef& invoice = doc.types[0];
    CHECK(invoice.name == "Invoice");
    const auto& fields = std::get<ObjectBody>(invoice.body).fields;
    REQUIRE(fields.size() == 6);
    CHECK(fields[3] == field("lines", TypeExpr::array(TypeExpr::named("InvoiceLine"))));
    Field metadata = field("metadata", TypeExpr::map(TypeExpr::scalar(ScalarKind::any)), true);
    metadata.since = "2.1";
    CHECK(fields[5] == metadata);
    CHECK(doc.types[1] == TypeDef{"InvoiceStatus", EnumBody{{"draft", "sent", "paid", "overdue"}}});

    const Operation& create = doc.ops[0];
    CHECK(create.name == "create_invoice");
    CHECK(create.method == HttpMethod::post);
    CHECK(create.path == "/invoices");
    CHECK(create.desc == std::vector<std::string>{"Creates an invoice for a customer."});
    REQUIRE(create.inputs.size() == 3);
    CHECK(create.inputs[2].name == "billing_address");
    CHECK(create.inputs[2].optional);
    CHECK(create.inputs[2].location == ParamLocation::body);
    CHECK_FALSE(create.inputs[2].location_explicit);
    CHECK(create.output == Output{TypeExpr::named("Invoice")});

    const Operation& update = doc.ops[1];
    CHECK(update.modifiers.idempotent);
    CHECK(update.inputs[0].location == ParamLocation::path);

    const Operation& customer = doc.ops[4];
    REQUIRE(customer.output);
    CHECK(std::get<ObjectBody>(*customer.output).fields.size() == 2);

    REQUIRE(doc.webhooks.size() == 1);
    const Webhook& paid = doc.webhooks[0];
    CHECK(paid.name == "invoice_paid");
    CHECK(paid.trigger == "When invoice.status changes to \"paid\".");
    REQUIRE(paid.payload.size() == 3);
    CHECK(paid.payload[0].location == ParamLocation::header);
    CHECK(paid.payload[0].location_explicit);
    CHECK(paid.payload[0].wire_name == "X-Event-ID");
    CHECK(paid.payload[1].location == ParamLocation::body);

    REQUIRE(doc.errors);
    CHECK(doc.errors->base_type == "ApiError");
    REQUIRE(doc.errors->entries.size() == 3);
    const ErrorDef& dup = doc.errors->entries[2];
    CHECK(dup.code == 409);
    CHECK(dup.label == "duplicate_customer");
    CHECK(dup.ops == std::vector<std::string>{"create_customer"});
    CHECK(dup.desc == "A customer with this email already exists.");
    CHECK(dup.extra_fields == std::vector<Field>{field("existing_customer_id", TypeExpr::scalar(ScalarKind::str))});

    REQUIRE(doc.limits);
    CHECK(doc.limits->on_exceed == OnExceed{429, "retry_after"});
    REQUIRE(doc.limits->plans.size() == 2);
    CHECK(doc.limits->plans[0].quotas[0] == RateSpec{1000, RatePeriod::month, "key", "monthly requests"});
    CHECK(doc.limits->plans[1].rates[0] == RateSpec{600, RatePeriod::minute, "key", std::nullopt});

    REQUIRE(doc.flows.size() == 1);
    const Flow& flow = doc.flows[0];
    CHECK(flow.title == "Invoice lifecycle");
    CHECK(flow.expr == parse_flow_expr("create_invoice -> update_invoice* -> send_invoice -> ...(awaiting payment) "
                                       "-> invoice_paid | invoice_overdue"));
    REQUIRE(flow.conditions.size() == 2);
    CHECK(flow.conditions[1] == FlowCondition{"invoice_overdue", "due date passes without payment"});
}

TEST_CASE("minimal document") {
    auto doc = parse_ok(kMinimal);
    CHECK(doc.meta.auth.scheme == AuthScheme::none);
    REQUIRE(doc.ops.size() == 1);
    CHECK(doc.ops[0].output == Output{ObjectBody{{field("ok", TypeExpr::scalar(ScalarKind::bool_))}}});
    CHECK(doc.types.empty());
    CHECK_FALSE(doc.errors);
    CHECK_FALSE(doc.limits);
}

TEST_CASE("required sections") {
    auto r = parse_document("[meta]\napi: X\nbase: https://a.b\nauth: none\n");
    CHECK_FALSE(r.ok());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].code == "missing-section");
    CHECK(r.diagnostics[0].message == "required section [ops] absent");

    r = parse_document("[ops]\nping GET /ping\n");
    CHECK(has_code(r, "missing-section"));

    ParseOptions fragment;
    fragment.require_core_sections = false;
    r = parse_document("[limits]\non_exceed: 429 retry_after\n", fragment);
    CHECK(r.ok());
}

TEST_CASE("meta requires api and base") {
    auto r = parse_document("[meta]\napi: X\n[ops]\n");
    CHECK(has_code(r, "missing-meta-field"));
}

TEST_CASE("section order and repetition") {
    auto r = parse_document("[ops]\nping GET /ping\n[meta]\napi: X\nbase: https://a.b\nauth: none\n");
    CHECK(r.ok());
    CHECK(has_code(r, "section-order"));

    r = parse_document(std::string(kMinimal) + "[ops]\npong GET /pong\n");
    CHECK_FALSE(r.ok());
    CHECK(has_code(r, "duplicate-section"));

    r = parse_document(std::string(kMinimal) + "[extras]\nx\n");
    CHECK(has_code(r, "unknown-section"));
}

TEST_CASE("tabs in indentation are a hard error") {
    auto r = parse_document("[meta]\napi: X\nbase: https://a.b\nauth: none\n[ops]\nping GET /ping\n\t< ok: bool\n");
    CHECK_FALSE(r.ok());
    REQUIRE(has_code(r, "tab-indent"));
    auto it = std::find_if(r.diagnostics.begin(), r.diagnostics.end(),
                           [](const Diagnostic& d) { return d.code == "tab-indent"; });
    CHECK(it->span->line == 7);
    CHECK(it->span->column == 1);
}

TEST_CASE("indentation must be exactly one unit") {
    auto r = parse_document("[meta]\napi: X\nbase: https://a.b\nauth: none\n[ops]\nping GET /ping\n   < ok: bool\n");
    CHECK(has_code(r, "bad-indent"));

    ParseOptions four;
    four.indent_width = 4;
    r = parse_document("[meta]\napi: X\nbase: https://a.b\nauth: none\n[ops]\nping GET /ping\n    < ok: bool\n", four);
    CHECK(r.ok());
}

TEST_CASE("CRLF input is normalized") {
    std::string text = kMinimal;
    std::string crlf;
    for (char c : text) {
        if (c == '\n') crlf += '\r';
        crlf += c;
    }
    CHECK(parse_ok(crlf) == parse_ok(text));
}

TEST_CASE("comments") {
    auto doc = parse_ok(
        "# leading comment\n[meta]\napi: X # kept, api is prose\nbase: https://a.b # dropped\nauth: none\n"
        "[ops]\n# between entries\nping GET /ping +idempotent # trailing\n  Prose keeps # characters.\n"
        "  > q?: str = \"a # b\" # comment after a quoted default\n  < ok: bool\n");
    CHECK(doc.meta.api == "X # kept, api is prose");
    CHECK(doc.meta.base == "https://a.b");
    CHECK(doc.ops[0].modifiers.idempotent);
    CHECK(doc.ops[0].desc == std::vector<std::string>{"Prose keeps # characters."});
    CHECK(doc.ops[0].inputs[0].default_value == Literal{Literal::Kind::string, "a # b"});
}

TEST_CASE("error recovery reports one error per broken line") {
    std::string text =
        "[meta]\napi: X\nbase: https://a.b\nauth: none\n"
        "[types]\nA:\n  x str\n  y: [int\nB: a || b\n"
        "[ops]\nget_a GET /a\n  > n: int = \n  < A\nput_a FETCH /a\nok GET /ok\n  < A\n"
        "[limits]\nplan: free\n  rate: 60/week\n";
    auto r = parse_document(text);
    CHECK_FALSE(r.ok());
    CHECK(count_errors(r.diagnostics) >= 6);
    for (const auto& d : r.diagnostics) CHECK(d.span.has_value());
}

TEST_CASE("parse is deterministic") {
    std::string text = test::read_file(test::fixture_path("invoice_service.lapis")) + "[bogus]\n";
    auto a = parse_document(text);
    auto b = parse_document(text);
    CHECK(a.diagnostics == b.diagnostics);
    CHECK(a.locations == b.locations);
}

TEST_CASE("source map locates entities") {
    auto r = parse_document(test::read_file(test::fixture_path("invoice_service.lapis")));
    REQUIRE(r.ok());
    CHECK(r.locations.at("op:create_invoice").line == 32);
    CHECK(r.locations.at("op:create_invoice>lines").line == 35);
    CHECK(r.locations.at("type:Invoice.metadata").column == 3);
    CHECK(r.locations.count("error:409:duplicate_customer") == 1);

    std::vector<Diagnostic> ds{{Severity::error, "x", "m", "op:create_invoice>lines", std::nullopt}};
    locate(ds, r.locations);
    REQUIRE(ds[0].span);
    CHECK(ds[0].span->line == 35);
}

TEST_CASE("parse_type_expr") {
    CHECK(parse_type_expr("[InvoiceLine]") == TypeExpr::array(TypeExpr::named("InvoiceLine")));
    CHECK(parse_type_expr("{str:any}") == TypeExpr::map(TypeExpr::scalar(ScalarKind::any)));
    CHECK(parse_type_expr("[[int]]") == TypeExpr::array(TypeExpr::array(TypeExpr::scalar(ScalarKind::int_))));
    CHECK(parse_type_expr("[ { str : X } ]") == TypeExpr::array(TypeExpr::map(TypeExpr::named("X"))));
    CHECK(parse_type_expr("Strr") == TypeExpr::named("Strr"));
    for (auto [name, kind] : {std::pair{"str", ScalarKind::str}, std::pair{"int", ScalarKind::int_},
                              std::pair{"float", ScalarKind::float_}, std::pair{"bool", ScalarKind::bool_},
                              std::pair{"date", ScalarKind::date}, std::pair{"datetime", ScalarKind::datetime},
                              std::pair{"file", ScalarKind::file}, std::pair{"any", ScalarKind::any}}) {
        CHECK(parse_type_expr(name) == TypeExpr::scalar(kind));
    }
    CHECK_THROWS_AS(parse_type_expr("[int"), ParseError);
    CHECK_THROWS_AS(parse_type_expr("int]"), ParseError);
    CHECK_THROWS_AS(parse_type_expr("{int:str}"), ParseError);
    CHECK_THROWS_AS(parse_type_expr(""), ParseError);
    try {
        parse_type_expr("{int:str}");
    } catch (const ParseError& e) {
        CHECK(e.code() == "map-key-type");
        CHECK(e.span().column == 2);
    }
}

TEST_CASE("parse_auth") {
    CHECK(parse_auth("bearer header:Authorization") ==
          AuthSpec{AuthScheme::bearer, CredentialLocation::header, "Authorization"});
    CHECK(parse_auth("none") == AuthSpec{AuthScheme::none, std::nullopt, std::nullopt});
    CHECK(parse_auth("apikey query:api_key") == AuthSpec{AuthScheme::apikey, CredentialLocation::query, "api_key"});
    CHECK(parse_auth("oauth2") == AuthSpec{AuthScheme::oauth2, std::nullopt, std::nullopt});
    CHECK_THROWS_AS(parse_auth("token"), ParseError);
    CHECK_THROWS_AS(parse_auth("bearer Authorization"), ParseError);
    CHECK_THROWS_AS(parse_auth("bearer body:x"), ParseError);
    CHECK_THROWS_AS(parse_auth("bearer header:"), ParseError);
}

TEST_CASE("parse_flow_expr") {
    auto lifecycle = parse_flow_expr(
        "create_invoice -> update_invoice* -> send_invoice -> ...(awaiting payment) -> invoice_paid | invoice_overdue");
    CHECK(lifecycle == FlowExpr::seq({
                           FlowExpr::step("create_invoice"),
                           FlowExpr::step("update_invoice", true),
                           FlowExpr::step("send_invoice"),
                           FlowExpr::wait("awaiting payment"),
                           FlowExpr::branch({FlowExpr::step("invoice_paid"), FlowExpr::step("invoice_overdue")}),
                       }));
    CHECK(parse_flow_expr("a -> b") == FlowExpr::seq({FlowExpr::step("a"), FlowExpr::step("b")}));
    CHECK(parse_flow_expr("a | b | c") ==
          FlowExpr::branch({FlowExpr::step("a"), FlowExpr::step("b"), FlowExpr::step("c")}));
    CHECK(parse_flow_expr("a") == FlowExpr::step("a"));
    CHECK_THROWS_AS(parse_flow_expr("a ->"), ParseError);
    CHECK_THROWS_AS(parse_flow_expr("a | | b"), ParseError);
    CHECK_THROWS_AS(parse_flow_expr("a b"), ParseError);
    CHECK_THROWS_AS(parse_flow_expr("...(open"), ParseError);
    try {
        parse_flow_expr("a ->");
    } catch (const ParseError& e) {
        CHECK(e.code() == "dangling-arrow");
    }
}

TEST_CASE("parameter locations") {
    auto doc = parse_ok(
        "[meta]\napi: X\nbase: https://a.b\nauth: none\n[ops]\n"
        "search POST /search/{index}\n  > index: str\n  > q: str\n  > verbose?: bool @query\n"
        "  > trace: str @header:X-Trace\n  > id: int @path:itemId\n"
        "remove DELETE /items\n  > id: int\n");
    const auto& in = doc.ops[0].inputs;
    CHECK(in[0].location == ParamLocation::path);
    CHECK(in[1].location == ParamLocation::body);
    CHECK(in[2].location == ParamLocation::query);
    CHECK(in[2].location_explicit);
    CHECK(in[3].wire_name == "X-Trace");
    CHECK(in[4].wire_name == "itemId");
    CHECK(doc.ops[1].inputs[0].location == ParamLocation::query);
}

TEST_CASE("field annotations and literals") {
    auto doc = parse_ok(
        "[meta]\napi: X\nbase: https://a.b\nauth: none\n[types]\nT:\n"
        "  a?: int = 20\n  b: float = -1.5e3\n  c: bool = true\n  d: str = \"say \\\"hi\\\" \\\\ bye\"\n"
        "  e: Color = red @since:1.2 @deprecated \"use f\"\n  f: str @deprecated\n"
        "Color: red | green\n[ops]\n");
    const auto& f = std::get<ObjectBody>(doc.types[0].body).fields;
    CHECK(f[0].default_value == Literal{Literal::Kind::integer, "20"});
    CHECK(f[1].default_value == Literal{Literal::Kind::number, "-1.5e3"});
    CHECK(f[2].default_value == Literal{Literal::Kind::boolean, "true"});
    CHECK(f[3].default_value == Literal{Literal::Kind::string, "say \"hi\" \\ bye"});
    CHECK(f[4].default_value == Literal{Literal::Kind::bare, "red"});
    CHECK(f[4].since == "1.2");
    CHECK(f[4].deprecated == "use f");
    CHECK(f[5].deprecated == "");
}

TEST_CASE("malformed constructs") {
    auto expect = [](const std::string& body, std::string_view code) {
        auto r = parse_document("[meta]\napi: X\nbase: https://a.b\nauth: none\n" + body);
        INFO(body);
        INFO(codes(r));
        CHECK(has_code(r, code));
    };
    expect("[ops]\nping GET /ping +fast\n", "unknown-modifier");
    expect("[ops]\nping FETCH /ping\n", "unknown-method");
    expect("[ops]\nping GET ping\n", "expected-path");
    expect("[ops]\nping GET /ping\n  < A\n  < B\n", "duplicate-output");
    expect("[ops]\nping GET /ping\n  > a: int\n  late prose\n", "misplaced-description");
    expect("[ops]\nping GET /ping\n  > a: int @since:1\n", "unknown-annotation");
    expect("[ops]\nping GET /ping\n  > a: str = \"open\n", "unterminated-string");
    expect("[ops]\nping GET /ping\n  > a: str = \"bad \\n\"\n", "bad-escape");
    expect("[types]\n  x: int\n[ops]\n", "unexpected-indent");
    expect("[types]\nE: a | b\n  x: int\n[ops]\n", "unexpected-line");
    expect("[ops]\n[webhooks]\nw POST /w\n", "expected-token");
    expect("[ops]\n[webhooks]\nw -> POST /w\n  ! a\n  ! b\n", "duplicate-trigger");
    expect("[ops]\n[errors]\n4O4 not_found\n", "expected-status");
    expect("[ops]\n[limits]\nplan: free\n  rate: 10/week\n", "malformed-rate");
    expect("[ops]\n[flows]\nf \"F\"\n", "missing-flow-expr");
    expect("[ops]\n[flows]\nf\n  a -> b\n  c -> d\n", "unexpected-line");
    expect("[ops]\nstray line\n  x\n", "unknown-method");
    auto r = parse_document("orphan\n[meta]\napi: X\nbase: https://a.b\n[ops]\n");
    CHECK(has_code(r, "content-outside-section"));
    r = parse_document("[meta]\napi: X\nbase: https://a.b\napi: Y\n[ops]\n");
    CHECK(has_code(r, "duplicate-meta-key"));
}

TEST_CASE("errors section accepts multi-line descriptions") {
    auto doc = parse_ok("[meta]\napi: X\nbase: https://a.b\nauth: none\n[ops]\n[errors]\n500 internal_error\n"
                        "  Something broke.\n  Try again later.\n");
    CHECK(doc.errors->entries[0].desc == "Something broke. Try again later.");
}

TEST_CASE("empty optional sections read back as absent") {
    auto doc = parse_ok(std::string(kMinimal) + "[errors]\n[limits]\n");
    CHECK_FALSE(doc.errors);
    CHECK_FALSE(doc.limits);
}
