#include <doctest.h>

#include "lapis/emitter.hpp"
#include "lapis/parser.hpp"
#include "test_support.hpp"

using namespace lapis;

namespace {

const char* kMinimal = "[meta]\napi: X\nbase: https://a.b\nauth: none\n[ops]\nping GET /ping\n  < ok: bool\n";

LapisDocument parse_ok(const std::string& text, const ParseOptions& options = {}) {
    auto r = parse_document(text, options);
    for (const auto& d : r.diagnostics) INFO(format_diagnostic(d));
    REQUIRE(r.ok());
    return *r.document;
}

LapisDocument invoice() { return parse_ok(test::read_file(test::fixture_path("invoice_service.lapis"))); }

// Every space is a separator: no trailing blanks, no runs of blank lines,
// no double spaces outside indentation and quoted text.
void lint(const std::string& text) {
    REQUIRE(!text.empty());
    CHECK(text.back() == '\n');
    CHECK(text.find("\r") == std::string::npos);
    CHECK(text.find("\n\n\n") == std::string::npos);
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        INFO(line);
        CHECK(line.back() != ' ');
        auto body = line.find_first_not_of(' ');
        if (line.find('"') == std::string::npos) CHECK(line.find("  ", body) == std::string::npos);
    }
}

}  // namespace

TEST_CASE("minimal document emits seven lines") {
    std::string text = emit_document(parse_ok(kMinimal));
    CHECK(text == kMinimal);
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);
}

TEST_CASE("emit_type_expr") {
    CHECK(emit_type_expr(TypeExpr::map(TypeExpr::scalar(ScalarKind::any))) == "{str:any}");
    CHECK(emit_type_expr(TypeExpr::scalar(ScalarKind::str)) == "str");
    CHECK(emit_type_expr(TypeExpr::array(TypeExpr::map(TypeExpr::named("X")))) == "[{str:X}]");
    CHECK(emit_type_expr(TypeExpr::scalar(ScalarKind::int_)) == "int");
    CHECK(emit_type_expr(TypeExpr::scalar(ScalarKind::float_)) == "float");
    CHECK(emit_type_expr(TypeExpr::scalar(ScalarKind::bool_)) == "bool");
}

TEST_CASE("type expressions round-trip through text") {
    for (const char* text : {"str", "[int]", "{str:[X]}", "[[{str:any}]]", "Pet"}) {
        CHECK(emit_type_expr(parse_type_expr(text)) == text);
    }
}

TEST_CASE("invoice [errors] section reproduces the reference listing") {
    auto sections = emit_sections(invoice());
    CHECK(sections.errors == test::read_file(test::fixture_path("invoice_errors.lapis")));
}

TEST_CASE("invoice document re-parses equal and is idempotent") {
    auto doc = invoice();
    std::string once = emit_document(doc);
    lint(once);
    auto back = parse_ok(once);
    CHECK(back == doc);
    CHECK(emit_document(back) == once);
}

TEST_CASE("section layout") {
    std::string text = emit_document(invoice());
    std::vector<std::size_t> at;
    for (const char* h : {"[meta]\n", "[types]\n", "[ops]\n", "[webhooks]\n", "[errors]\n", "[limits]\n", "[flows]\n"}) {
        at.push_back(text.find(h));
        CHECK(at.back() != std::string::npos);
    }
    CHECK(std::is_sorted(at.begin(), at.end()));
    CHECK(text.find("InvoiceStatus: draft | sent | paid | overdue\n") != std::string::npos);
    CHECK(text.find("  < event_id: str @header:X-Event-ID\n") != std::string::npos);
    CHECK(text.find("  quota: 1000/mo @key \"monthly requests\"\n") != std::string::npos);
    CHECK(text.find("update_invoice PATCH /invoices/{invoice_id} +idempotent\n") != std::string::npos);
    // Ops are separated by one blank line; nothing else is.
    CHECK(text.find("  < Invoice\n\nupdate_invoice") != std::string::npos);
    CHECK(text.find("\n\n[") == std::string::npos);
}

TEST_CASE("empty optional sections are omitted") {
    auto doc = parse_ok(kMinimal);
    doc.errors = ErrorSection{};
    doc.limits = LimitsSection{};
    std::string text = emit_document(doc);
    CHECK(text.find("[errors]") == std::string::npos);
    CHECK(text.find("[limits]") == std::string::npos);
    CHECK(text.find("[types]") == std::string::npos);
}

TEST_CASE("flow wrapping breaks before arrows") {
    auto doc = invoice();
    EmitStyle style;
    style.max_line = 64;
    std::string text = emit_sections(doc, style).flows;
    CHECK(text ==
          "[flows]\n"
          "invoice_lifecycle \"Invoice lifecycle\"\n"
          "  create_invoice -> update_invoice* -> send_invoice\n"
          "    -> ...(awaiting payment) -> invoice_paid | invoice_overdue\n"
          "  ? invoice_paid: payment received before due date\n"
          "  ? invoice_overdue: due date passes without payment\n");
    CHECK(parse_ok(emit_document(doc, style)) == doc);

    style.max_line = std::nullopt;
    text = emit_sections(doc, style).flows;
    CHECK(text.find("send_invoice -> ...(awaiting payment) -> invoice_paid | invoice_overdue\n") != std::string::npos);

    style.max_line = 10;  // every step on its own line
    text = emit_document(doc, style);
    CHECK(parse_ok(text) == doc);
    CHECK(text.find("    -> update_invoice*\n") != std::string::npos);
}

TEST_CASE("wider indentation round-trips with a matching parser") {
    auto doc = invoice();
    EmitStyle style;
    style.indent_width = 4;
    ParseOptions options;
    options.indent_width = 4;
    std::string text = emit_document(doc, style);
    CHECK(text.find("\n    > customer_id: str\n") != std::string::npos);
    CHECK(parse_ok(text, options) == doc);
}

TEST_CASE("blank lines between ops are optional") {
    EmitStyle style;
    style.blank_line_between_ops = false;
    std::string text = emit_document(invoice(), style);
    CHECK(text.find("\n\n") == std::string::npos);
}

TEST_CASE("documents with validation errors are refused") {
    auto doc = invoice();
    doc.ops[0].output = TypeExpr::named("Invoce");
    CHECK_THROWS_AS(emit_document(doc), EmitError);
    try {
        emit_document(doc);
    } catch (const EmitError& e) {
        REQUIRE(e.diagnostics().size() == 1);
        CHECK(e.diagnostics()[0].code == "dangling-type-ref");
    }
}

TEST_CASE("quoting and literals") {
    CHECK(quote("plain") == "\"plain\"");
    CHECK(quote("a \"b\" \\ c") == "\"a \\\"b\\\" \\\\ c\"");
    CHECK(emit_literal({Literal::Kind::string, "x"}) == "\"x\"");
    CHECK(emit_literal({Literal::Kind::integer, "20"}) == "20");
    CHECK(emit_literal({Literal::Kind::bare, "available"}) == "available");
    CHECK(emit_auth({AuthScheme::apikey, CredentialLocation::header, "api_key"}) == "apikey header:api_key");
    CHECK(emit_auth({AuthScheme::none, std::nullopt, std::nullopt}) == "none");
}

TEST_CASE("deprecation and versions") {
    auto doc = parse_ok(
        "[meta]\napi: X\nbase: https://a.b\nauth: none\n[types]\nT:\n"
        "  a: str @deprecated\n  b: str @since:2 @deprecated \"say \\\"no\\\"\"\n[ops]\nold GET /old +deprecated\n");
    std::string text = emit_document(doc);
    CHECK(text.find("  a: str @deprecated\n") != std::string::npos);
    CHECK(text.find("  b: str @since:2 @deprecated \"say \\\"no\\\"\"\n") != std::string::npos);
    CHECK(text.find("old GET /old +deprecated\n") != std::string::npos);
    CHECK(parse_ok(text) == doc);
}
