#include <doctest.h>

#include <random>
#include <regex>
#include <string>
#include <vector>

#include "autodb/error.hpp"
#include "autodb/sql/parser.hpp"

using namespace autodb;
using namespace autodb::sql;

namespace {

ErrorCode code_of(std::string_view text) {
  try {
    parse(text);
  } catch (const DbError& e) {
    return e.code();
  }
  FAIL("expected an error for: " << text);
  return ErrorCode::kInternal;
}

// Independent reading of the quote-doubling rule.
std::string reference_unquote(const std::string& literal) {
  std::string inner = literal.substr(1, literal.size() - 2);
  return std::regex_replace(inner, std::regex("''"), "'");
}

Select nested_select(int depth) {
  Select s{{}, TableRef{"t0"}, std::nullopt};
  for (int i = 1; i <= depth; ++i) {
    Select outer{{}, Subquery{std::make_shared<const Select>(s), "s" + std::to_string(i)},
                 std::nullopt};
    s = outer;
  }
  return s;
}

struct Generator {
  std::mt19937_64 rng;

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  std::string name() {
    static const char* names[] = {"a", "b", "course", "Cap", "x_1", "enrol", "TA", "c2"};
    return names[pick(8)];
  }

  Value literal() {
    if (pick(2) == 0) return Value(std::int64_t(std::uniform_int_distribution<long>(-1000, 1000)(rng)));
    static const char* strs[] = {"", "O'Neil", "plain", "tab\there", "x y", "''"};
    return Value(std::string(strs[pick(6)]));
  }

  CompareOp op() { return static_cast<CompareOp>(pick(6)); }

  std::optional<Predicate> where() {
    if (pick(2) == 0) return std::nullopt;
    Predicate p;
    int n = 1 + pick(3);
    for (int i = 0; i < n; ++i) p.conjuncts.push_back({name(), op(), literal()});
    return p;
  }

  Select select(int depth) {
    Select s;
    if (pick(2) == 0) {
      s.projection = {"p" + std::to_string(pick(3)), "q"};
    }
    if (depth > 0 && pick(2) == 0) {
      s.source = Subquery{std::make_shared<const Select>(select(depth - 1)), "sub" + std::to_string(depth)};
    } else {
      s.source = TableRef{name()};
    }
    s.where = where();
    return s;
  }

  Statement statement() {
    switch (pick(6)) {
      case 0: {
        CreateTable t{name(), {}, {}};
        int n = 1 + pick(4);
        for (int i = 0; i < n; ++i) {
          ColumnDef c{"col" + std::to_string(i)};
          c.type = pick(2) == 0 ? ColumnType::kInt : ColumnType::kStr;
          c.width = c.type == ColumnType::kStr ? 1 + pick(64) : 0;
          c.not_null = pick(2) == 0;
          c.primary_key = i == 0 && pick(2) == 0;
          t.columns.push_back(c);
        }
        if (pick(2) == 0) t.checks.push_back({"col0", op(), literal()});
        return t;
      }
      case 1: return CreateIndex{name(), name()};
      case 2: {
        Insert ins{name(), {}};
        int n = 1 + pick(5);
        for (int i = 0; i < n; ++i) ins.values.push_back(literal());
        return ins;
      }
      case 3: return select(3);
      case 4: {
        Update u{name(), {}, where()};
        int n = 1 + pick(3);
        for (int i = 0; i < n; ++i) {
          if (pick(2) == 0) {
            u.assignments.push_back({name(), literal()});
          } else {
            u.assignments.push_back({name(), ColumnPlusLiteral{name(), pick(2) ? '+' : '-', pick(50)}});
          }
        }
        return u;
      }
      default: return Delete{name(), where()};
    }
  }
};

}  // namespace

TEST_CASE("tokenize the nested select statement") {
  auto toks = tokenize("select c1,c2 from (select * from TA) as tmp");
  std::vector<std::pair<TokenKind, std::string>> expected = {
      {TokenKind::kKeyword, "select"}, {TokenKind::kIdentifier, "c1"}, {TokenKind::kSymbol, ","},
      {TokenKind::kIdentifier, "c2"},  {TokenKind::kKeyword, "from"},  {TokenKind::kSymbol, "("},
      {TokenKind::kKeyword, "select"}, {TokenKind::kSymbol, "*"},      {TokenKind::kKeyword, "from"},
      {TokenKind::kIdentifier, "TA"},  {TokenKind::kSymbol, ")"},      {TokenKind::kKeyword, "as"},
      {TokenKind::kIdentifier, "tmp"}};
  REQUIRE(toks.size() == expected.size());
  for (std::size_t i = 0; i < toks.size(); ++i) {
    CHECK(toks[i].kind == expected[i].first);
    CHECK(toks[i].text == expected[i].second);
  }
  CHECK(toks[0].position == 0);
  CHECK(toks[1].position == 7);
  CHECK(toks[9].position == 33);
}

TEST_CASE("tokenize edge cases") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \n\t").empty());

  auto t = tokenize("insert into t values (1, 'O''Neil')");
  REQUIRE(t.size() == 9);
  CHECK(t[7].kind == TokenKind::kString);
  CHECK(t[7].text == reference_unquote("'O''Neil'"));
  CHECK(t[7].text == "O'Neil");

  auto kw = tokenize("SeLeCt Foo FROM Bar WHERE a <> 1");
  CHECK(kw[0].text == "select");
  CHECK(kw[1].text == "Foo");
  CHECK(kw[2].text == "from");
  CHECK(kw[6].text == "!=");

  CHECK(tokenize("''")[0].text.empty());
  CHECK(tokenize("9223372036854775807")[0].text == "9223372036854775807");
}

TEST_CASE("tokenize errors") {
  try {
    tokenize("select 'abc");
    FAIL("expected error");
  } catch (const DbError& e) {
    CHECK(e.code() == ErrorCode::kUnterminatedString);
    CHECK(std::string(e.what()).find("offset 7") != std::string::npos);
  }
  try {
    tokenize("select # from t");
    FAIL("expected error");
  } catch (const DbError& e) {
    CHECK(e.code() == ErrorCode::kIllegalCharacter);
    CHECK(std::string(e.what()).find("offset 7") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(tokenize("9223372036854775808"), doctest::Contains("out of range"), DbError);
  CHECK(code_of("select 12abc from t") == ErrorCode::kIllegalCharacter);
}

TEST_CASE("string literal escapes match the reference reading") {
  std::mt19937 rng(11);
  const std::string alphabet = "ab' \t";
  for (int i = 0; i < 300; ++i) {
    std::string raw;
    int n = std::uniform_int_distribution<int>(0, 8)(rng);
    for (int k = 0; k < n; ++k) raw += alphabet[rng() % alphabet.size()];
    std::string quoted = to_sql_literal(Value(raw));
    auto toks = tokenize(quoted);
    REQUIRE(toks.size() == 1);
    CHECK(toks[0].text == reference_unquote(quoted));
    CHECK(toks[0].text == raw);
  }
}

TEST_CASE("parse the nested select into a subquery source") {
  ParseTrace trace;
  Statement s = parse("select c1,c2 from (select * from TA) as tmp", {std::nullopt, &trace});
  Select inner{{}, TableRef{"TA"}, std::nullopt};
  Select expected{{"c1", "c2"}, Subquery{std::make_shared<const Select>(inner), "tmp"}, std::nullopt};
  CHECK(std::get<Select>(s) == expected);
  CHECK(trace.frame_pushes == 1);
  CHECK(trace.frame_pops == 1);
  CHECK(trace.final_depth == 1);

  // `as` is optional before the alias.
  CHECK(parse("select c1,c2 from (select * from TA) tmp") == s);
}

TEST_CASE("parse minimal and typical statements") {
  CHECK(parse("delete from t") == Statement(Delete{"t", std::nullopt}));
  CHECK(parse("DELETE FROM t;") == Statement(Delete{"t", std::nullopt}));

  Update expected{"course",
                  {Assignment{"capacity", ColumnPlusLiteral{"capacity", '-', 1}}},
                  Predicate{{Comparison{"id", CompareOp::kEq, Value(std::int64_t{7})}}}};
  CHECK(parse("update course set capacity = capacity - 1 where id = 7") == Statement(expected));

  CHECK(parse("insert into t values (1, -2, 'x')") ==
        Statement(Insert{"t", {Value(std::int64_t{1}), Value(std::int64_t{-2}), Value(std::string("x"))}}));

  CreateTable course{"course",
                     {ColumnDef{"id", ColumnType::kInt, 0, false, true},
                      ColumnDef{"name", ColumnType::kStr, 32, false, false},
                      ColumnDef{"capacity", ColumnType::kInt, 0, false, false}},
                     {CheckDef{"capacity", CompareOp::kGe, Value(std::int64_t{0})}}};
  CHECK(parse("create table course (id INT PRIMARY KEY, name STR(32), capacity INT, CHECK capacity >= 0)") ==
        Statement(course));
  CHECK(parse("create table course (id int primary key, name str(32), capacity int, check (capacity >= 0));") ==
        Statement(course));

  CHECK(parse("create index on course (name)") == Statement(CreateIndex{"course", "name"}));
  CHECK(parse("create index by_name on course (name)") == Statement(CreateIndex{"course", "name"}));
  CHECK(parse("checkpoint") == Statement(Checkpoint{}));
  CHECK(parse("SHUTDOWN;") == Statement(Shutdown{}));

  auto sel = std::get<Select>(parse("select a from t where a >= 3 and b != 'z'"));
  REQUIRE(sel.where);
  CHECK(sel.where->conjuncts.size() == 2);
  CHECK(sel.where->conjuncts[1].op == CompareOp::kNe);
}

TEST_CASE("syntax errors carry token positions") {
  auto pos_of = [](std::string_view text) -> std::size_t {
    try {
      parse(text);
    } catch (const SyntaxError& e) {
      return e.position();
    }
    FAIL("expected SyntaxError for " << text);
    return 0;
  };
  CHECK(pos_of("") == 0);
  CHECK(pos_of("frobnicate t") == 0);
  CHECK(pos_of("select * from t x") == 4);
  CHECK(pos_of("select * from") == 3);
  CHECK(pos_of("select * from t; delete from t") == 5);
  CHECK(pos_of("select * from (select * from t)") == 9);  // alias required
  CHECK(pos_of("select a, a from t") == 3);                  // duplicate projection
  CHECK(pos_of("select * from t)") == 4);                    // ')' with no open subquery
  CHECK(pos_of("update t set a = b") == 6);                  // bare column needs +/- literal

  try {
    parse("select * from t where");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.expected() == std::vector<std::string>{"column"});
  }
}

TEST_CASE("unclosed subquery is a nesting error") {
  CHECK(code_of("select * from (select * from t") == ErrorCode::kNesting);
  CHECK(code_of("select * from (select * from (select * from t) as a") == ErrorCode::kNesting);
}

TEST_CASE("k-deep subselects yield a source chain of depth k") {
  for (int k = 0; k <= 8; ++k) {
    Select s = nested_select(k);
    ParseTrace trace;
    Statement parsed = parse(to_sql(s), {std::nullopt, &trace});
    CHECK(subquery_depth(std::get<Select>(parsed)) == static_cast<std::size_t>(k));
    CHECK(std::get<Select>(parsed) == s);
    CHECK(trace.frame_pushes == static_cast<std::size_t>(k));
    CHECK(trace.frame_pops == trace.frame_pushes);
    CHECK(trace.final_depth == 1);
  }
}

TEST_CASE("render then parse is the identity on generated statements") {
  Generator gen{std::mt19937_64(2024)};
  for (int i = 0; i < 600; ++i) {
    Statement s = gen.statement();
    std::string text = to_sql(s);
    INFO(text);
    ParseTrace trace;
    Statement back = parse(text, {std::nullopt, &trace});
    CHECK(back == s);
    if (std::holds_alternative<Select>(s)) {
      CHECK(trace.frame_pushes == trace.frame_pops);
      CHECK(trace.final_depth == 1);
    }
  }
}

TEST_CASE("syntax error positions stay within the token range") {
  Generator gen{std::mt19937_64(77)};
  std::mt19937 rng(5);
  int errors = 0;
  for (int i = 0; i < 600; ++i) {
    auto toks = tokenize(to_sql(gen.statement()));
    // Drop or duplicate a random token.
    std::size_t at = rng() % toks.size();
    if (rng() % 2) {
      toks.erase(toks.begin() + static_cast<long>(at));
    } else {
      toks.insert(toks.begin() + static_cast<long>(at), toks[at]);
    }
    try {
      parse(std::span<const Token>(toks));
    } catch (const SyntaxError& e) {
      ++errors;
      CHECK(e.position() <= toks.size());
    } catch (const DbError& e) {
      CHECK(e.code() == ErrorCode::kNesting);
    }
  }
  CHECK(errors > 100);
}

TEST_CASE("parser honours a tight step limit") {
  ParseOptions opts;
  opts.step_limit = 3;
  CHECK_THROWS_AS(parse("select a, b, c from t", opts), SyntaxError);
}
