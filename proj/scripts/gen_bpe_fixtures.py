#!/usr/bin/env python3
"""Freeze reference BPE encodings for the tokenizer equivalence suite.

Runs tiktoken (the reference implementation) against the local vocabulary
files and writes tests/fixtures/bpe_fixtures.json: one entry per text with the
full rank sequence for each vocabulary. Re-run only when the fixture texts
change; the C++ tokenizer must reproduce these sequences exactly.

    python3 scripts/gen_bpe_fixtures.py [VOCAB_DIR]
"""
import json
import sys
from pathlib import Path

import tiktoken
from tiktoken.load import load_tiktoken_bpe
import tiktoken_ext.openai_public as public

ROOT = Path(__file__).resolve().parents[1]

TEXTS = [
    # LAPIS
    "[meta]\napi: Invoice Service\nbase: https://api.example.com/v2\nversion: 2.1.0\n",
    "auth: bearer header:Authorization\n",
    "Invoice:\n  id: str\n  customer_id: str\n  status: InvoiceStatus\n  lines: [InvoiceLine]\n  total: float\n  metadata?: {str:any} @since:2.1\n",
    "InvoiceStatus: draft | sent | paid | overdue\n",
    "create_invoice POST /invoices\n  Creates an invoice for a customer.\n  > customer_id: str\n  > lines: [InvoiceLine]\n  > billing_address?: Address\n  < Invoice\n",
    "invoice_paid -> POST /webhooks/invoice-paid\n  ! When invoice.status changes to \"paid\".\n  < event_id: str @header:X-Event-ID\n",
    "[errors]\n# Base structure: ApiError\n401 unauthorized\n  Token is missing, expired, or invalid.\n",
    "409 duplicate_customer @ops:create_customer\n  A customer with this email already exists.\n  ~ existing_customer_id: str\n",
    "[limits]\non_exceed: 429 retry_after\nplan: free\n  rate: 60/m @key\n  quota: 1000/mo @key \"monthly requests\"\n",
    "invoice_lifecycle \"Invoice lifecycle\"\n  create_invoice -> update_invoice* -> send_invoice\n    -> ...(awaiting payment) -> invoice_paid | invoice_overdue\n",
    "  ? invoice_paid: payment received before due date\n",
    "list_pets GET /pets +paginated\n  > limit?: int = 20\n  < [Pet]\n",
    "upload_file POST /pet/{petId}/uploadImage\n  > petId: int\n  > additionalMetadata: str @query\n  < ApiResponse\n",
    # YAML
    "openapi: 3.0.4\ninfo:\n  title: Swagger Petstore - OpenAPI 3.0\n  version: 1.0.27\n",
    "paths:\n  /pet/{petId}:\n    get:\n      operationId: getPetById\n      parameters:\n      - name: petId\n        in: path\n        required: true\n",
    "      responses:\n        '200':\n          description: successful operation\n          content:\n            application/json:\n              schema:\n                $ref: '#/components/schemas/Pet'\n",
    "        '404':\n          description: Pet not found\n        default:\n          description: Unexpected error\n",
    "components:\n  schemas:\n    Order:\n      type: object\n      properties:\n        id:\n          type: integer\n          format: int64\n          example: 10\n",
    "description: |-\n  This is a sample Pet Store Server based on the OpenAPI 3.0 specification.\n\n  Some useful links:\n  - [The Pet Store repository](https://github.com/swagger-api/swagger-petstore)\n",
    "security:\n- petstore_auth:\n  - write:pets\n  - read:pets\n",
    "x-github:\n  githubCloudOnly: false\n  enabledForGitHubApps: true\n  category: repos\n",
    # JSON
    '{"openapi":"3.0.4","info":{"title":"Swagger Petstore","version":"1.0.27"}}',
    '{\n  "type": "object",\n  "properties": {\n    "id": {\n      "type": "integer",\n      "format": "int64"\n    }\n  }\n}',
    '{"responses":{"400":{"description":"Invalid ID supplied"},"404":{"description":"Pet not found"}}}',
    '"$ref": "#/components/schemas/simple-user"',
    '{"enum":["available","pending","sold"],"default":"available"}',
    '[1, 22, 333, 4444, 55555, 666666, 7777777, 3.14159, -0.5e10]',
    # whitespace and line-ending edge cases
    "",
    " ",
    "\n",
    "\n\n\n",
    "a  b   c    d",
    "trailing spaces   ",
    "line one\r\nline two\r\n\r\nline four",
    "\t\tindented with tabs\n\t\t\tdeeper",
    "mixed \t \n \n\t  whitespace  \n",
    # contractions and casing
    "I'm sure they'll say it's what we've seen, and you'd agree they're right.",
    "DON'T SHOUT, IT'S RUDE. He'LL Know.",
    "camelCaseIdentifier snake_case_identifier SCREAMING_SNAKE HTTPServerError",
    # numbers and punctuation
    "1234567890 12 345 6789 0.1 10/20/2030 v2.1.0 #42 @since:2.1",
    "!!! ??? ... --- *** /// ((())) {{{}}} [[[]]] <<>> ~~~ ^^^",
    "path/to/resource?query=value&other=1#fragment",
    # unicode
    "héllo wörld — naïve café, façade, résumé",
    "日本語のテキストとEnglish mixed 中文字符",
    "emoji 🎉🚀 and flags 🇯🇵 with ZWJ 👨‍👩‍👧",
    "Ελληνικά και Русский текст, עברית, العربية",
    "combining marks: é ä ñ, Hangul 한국어",
    "ǅungla ǈ titlecase Ǆ and modifier ʰʲ letters",
    "long ſ s and  nbsp em-space　ideographic",
    "🂡 musical 𝄞 math 𝔸𝔹ℂ and private ",
]


def encoding(name: str, vocab_dir: Path) -> tiktoken.Encoding:
    spec = getattr(public, name)
    # Build the encoding from the local file instead of the default download URL.
    ranks = load_tiktoken_bpe(str(vocab_dir / f"{name}.tiktoken"))
    # pat_str lives in the constructor's return value; call it with the loader patched.
    original = public.load_tiktoken_bpe
    public.load_tiktoken_bpe = lambda *a, **k: ranks
    try:
        params = spec()
    finally:
        public.load_tiktoken_bpe = original
    return tiktoken.Encoding(name=name, pat_str=params["pat_str"], mergeable_ranks=ranks,
                             special_tokens=params["special_tokens"])


def main() -> None:
    vocab_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "data/vocab"
    assert len(TEXTS) == 50, len(TEXTS)
    encs = {n: encoding(n, vocab_dir) for n in ("cl100k_base", "o200k_base")}
    fixtures = []
    for text in TEXTS:
        entry = {"text": text}
        for name, enc in encs.items():
            entry[name] = enc.encode(text, disallowed_special=())
        fixtures.append(entry)
    out = ROOT / "tests/fixtures/bpe_fixtures.json"
    out.write_text(json.dumps({"tokenizer": f"tiktoken {tiktoken.__version__}", "fixtures": fixtures},
                              ensure_ascii=False, indent=1) + "\n")
    print(f"wrote {out} ({len(fixtures)} fixtures)")


if __name__ == "__main__":
    main()
