#include "autodb/sql/parser.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <map>

#include "autodb/automaton.hpp"

namespace autodb::sql {

namespace {

using automaton::ContextStore;
using Builder = automaton::MachineBuilder<Token>;
using Machine = automaton::Automaton<Token>;
using Match = Builder::Match;
using Sink = std::function<void(ContextStore&, Value)>;

// Store keys.
constexpr std::string_view kFrames = "frames";
constexpr std::string_view kPendingSub = "pending_subquery";
constexpr std::string_view kPushes = "frame_pushes";
constexpr std::string_view kPops = "frame_pops";
constexpr std::string_view kComparison = "comparison";
constexpr std::string_view kCheckParen = "check_paren";

Match kw(std::string w) {
  return [w = std::move(w)](const Token& t) { return t.kind == TokenKind::kKeyword && t.text == w; };
}
Match sym(std::string s) {
  return [s = std::move(s)](const Token& t) { return t.kind == TokenKind::kSymbol && t.text == s; };
}
bool ident(const Token& t) { return t.kind == TokenKind::kIdentifier; }
bool integer(const Token& t) { return t.kind == TokenKind::kInteger; }
bool string_lit(const Token& t) { return t.kind == TokenKind::kString; }
bool compare_op(const Token& t) {
  return t.kind == TokenKind::kSymbol &&
         (t.text == "=" || t.text == "!=" || t.text == "<" || t.text == "<=" || t.text == ">" ||
          t.text == ">=");
}
bool at_end(ContextStore&, const Token* next) { return next == nullptr; }

CompareOp to_op(const std::string& s) {
  if (s == "=") return CompareOp::kEq;
  if (s == "!=") return CompareOp::kNe;
  if (s == "<") return CompareOp::kLt;
  if (s == "<=") return CompareOp::kLe;
  if (s == ">") return CompareOp::kGt;
  return CompareOp::kGe;
}

std::int64_t to_int(const Token& t) {
  std::int64_t v = 0;
  std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  return v;
}

void add_literal(Builder& b, const std::string& from, const std::string& to, const Sink& sink) {
  const std::string neg = from + "_neg";
  b.node(neg);
  b.edge(from, neg, sym("-"), "-");
  b.edge(neg, to, integer, "integer",
         [sink](ContextStore& s, const Token* t) { sink(s, Value(-to_int(*t))); });
  b.edge(from, to, integer, "integer",
         [sink](ContextStore& s, const Token* t) { sink(s, Value(to_int(*t))); });
  b.edge(from, to, string_lit, "string",
         [sink](ContextStore& s, const Token* t) { sink(s, Value(t->text)); });
}

// `from` may be followed by an optional ';' and then end of input.
void add_end(Builder& b, const std::string& from) {
  b.edge(from, "semi", sym(";"), ";");
  b.epsilon(from, "accept", at_end, {}, "end of input");
}

// WHERE conjunctions: cond -> cond_col -> cond_op -> cond_done, with AND
// looping back. The caller wires the remaining exits of cond_done.
void add_conditions(Builder& b, std::function<void(ContextStore&, Comparison)> sink) {
  b.node("cond").node("cond_col").node("cond_op").node("cond_done");
  b.edge("cond", "cond_col", ident, "column", [](ContextStore& s, const Token* t) {
    s.put(std::string(kComparison), Comparison{t->text, CompareOp::kEq, Value{}});
  });
  b.edge("cond_col", "cond_op", compare_op, "comparison operator",
         [](ContextStore& s, const Token* t) { s.get<Comparison>(kComparison).op = to_op(t->text); });
  add_literal(b, "cond_op", "cond_done", [sink](ContextStore& s, Value v) {
    Comparison c = std::move(s.get<Comparison>(kComparison));
    s.erase(kComparison);
    c.literal = std::move(v);
    sink(s, std::move(c));
  });
  b.edge("cond_done", "cond", kw("and"), "and");
}

[[noreturn]] void syntax(const std::string& what, const Token& at) {
  throw DbError(ErrorCode::kSyntax, what + " at offset " + std::to_string(at.position));
}

template <class T>
Builder::Action accept_as(std::string key) {
  return [key = std::move(key)](ContextStore& s, const Token*) {
    return std::any(Statement(std::move(s.get<T>(key))));
  };
}

// ---------------------------------------------------------------------------

Machine select_machine() {
  Builder b;
  for (const char* id : {"start", "proj", "proj_all", "proj_col", "proj_comma", "from",
                         "sub_open", "src", "sub_close", "alias_kw", "semi"}) {
    b.node(id);
  }
  b.node("accept", true, [](ContextStore& s, const Token*) {
    if (s.depth(kFrames) != 1) {
      throw DbError(ErrorCode::kNesting, "unclosed subquery (" +
                                             std::to_string(s.depth(kFrames) - 1) +
                                             " frame(s) still open)");
    }
    return std::any(Statement(s.top<Select>(kFrames)));
  });

  auto add_column = [](ContextStore& s, const Token* t) {
    auto& proj = s.top<Select>(kFrames).projection;
    if (std::find(proj.begin(), proj.end(), t->text) != proj.end()) {
      syntax("duplicate column '" + t->text + "' in projection", *t);
    }
    proj.push_back(t->text);
  };
  auto install_subquery = [](ContextStore& s, const Token* alias) {
    auto sub = std::make_shared<const Select>(s.get<Select>(kPendingSub));
    s.erase(kPendingSub);
    s.top<Select>(kFrames).source = Subquery{std::move(sub), alias->text};
  };
  auto nested = [](ContextStore& s, const Token*) { return s.depth(kFrames) > 1; };
  auto close_subquery = [](ContextStore& s, const Token*) {
    s.put(std::string(kPendingSub), s.pop<Select>(kFrames));
    ++s.get<std::size_t>(kPops);
  };

  b.edge("start", "proj", kw("select"), "select", [](ContextStore& s, const Token*) {
    s.put(std::string(kFrames), ContextStore::Stack{});
    s.push(kFrames, Select{});
    s.put(std::string(kPushes), std::size_t{0});
    s.put(std::string(kPops), std::size_t{0});
  });
  b.edge("proj", "proj_all", sym("*"), "*");
  b.edge("proj", "proj_col", ident, "column", add_column);
  b.edge("proj_col", "proj_comma", sym(","), ",");
  b.edge("proj_col", "from", kw("from"), "from");
  b.edge("proj_comma", "proj_col", ident, "column", add_column);
  b.edge("proj_all", "from", kw("from"), "from");

  b.edge("from", "src", ident, "table", [](ContextStore& s, const Token* t) {
    s.top<Select>(kFrames).source = TableRef{t->text};
  });
  // A '(' after FROM opens a new parse frame for the subquery.
  b.edge("from", "sub_open", sym("("), "(", [](ContextStore& s, const Token*) {
    s.push(kFrames, Select{});
    ++s.get<std::size_t>(kPushes);
  });
  b.edge("sub_open", "proj", kw("select"), "select");

  b.edge("src", "cond", kw("where"), "where");
  b.edge("src", "sub_close", sym(")"), ")", close_subquery, nested);
  add_end(b, "src");

  b.edge("sub_close", "alias_kw", kw("as"), "as");
  b.edge("sub_close", "src", ident, "alias", install_subquery);
  b.edge("alias_kw", "src", ident, "alias", install_subquery);

  add_conditions(b, [](ContextStore& s, Comparison c) {
    auto& where = s.top<Select>(kFrames).where;
    if (!where) where.emplace();
    where->conjuncts.push_back(std::move(c));
  });
  b.edge("cond_done", "sub_close", sym(")"), ")", close_subquery, nested);
  add_end(b, "cond_done");

  b.epsilon("semi", "accept", at_end, {}, "end of input");
  return std::move(b).build("start");
}

Machine insert_machine() {
  Builder b;
  for (const char* id : {"start", "into", "table", "values", "open", "value", "next", "close",
                         "semi"}) {
    b.node(id);
  }
  b.node("accept", true, accept_as<Insert>("insert"));
  b.edge("start", "into", kw("insert"), "insert");
  b.edge("into", "table", kw("into"), "into");
  b.edge("table", "values", ident, "table", [](ContextStore& s, const Token* t) {
    s.put("insert", Insert{t->text, {}});
  });
  b.edge("values", "open", kw("values"), "values");
  b.edge("open", "value", sym("("), "(");
  add_literal(b, "value", "next",
              [](ContextStore& s, Value v) { s.get<Insert>("insert").values.push_back(std::move(v)); });
  b.edge("next", "value", sym(","), ",");
  b.edge("next", "close", sym(")"), ")");
  add_end(b, "close");
  b.epsilon("semi", "accept", at_end, {}, "end of input");
  return std::move(b).build("start");
}

Machine update_machine() {
  Builder b;
  for (const char* id : {"start", "table", "set", "column", "eq", "rhs", "ref", "sign", "assigned",
                         "semi"}) {
    b.node(id);
  }
  b.node("accept", true, accept_as<Update>("update"));
  auto current = [](ContextStore& s) -> Assignment& {
    return s.get<Update>("update").assignments.back();
  };

  b.edge("start", "table", kw("update"), "update");
  b.edge("table", "set", ident, "table", [](ContextStore& s, const Token* t) {
    s.put("update", Update{t->text, {}, std::nullopt});
  });
  b.edge("set", "column", kw("set"), "set");
  b.edge("column", "eq", ident, "column", [](ContextStore& s, const Token* t) {
    s.get<Update>("update").assignments.push_back(Assignment{t->text, Value{}});
  });
  b.edge("eq", "rhs", sym("="), "=");
  b.edge("rhs", "ref", ident, "column", [current](ContextStore& s, const Token* t) {
    current(s).value = ColumnPlusLiteral{t->text, '+', 0};
  });
  auto set_sign = [current](ContextStore& s, const Token* t) {
    std::get<ColumnPlusLiteral>(current(s).value).sign = t->text[0];
  };
  b.edge("ref", "sign", sym("+"), "+", set_sign);
  b.edge("ref", "sign", sym("-"), "-", set_sign);
  b.edge("sign", "assigned", integer, "integer", [current](ContextStore& s, const Token* t) {
    std::get<ColumnPlusLiteral>(current(s).value).amount = to_int(*t);
  });
  add_literal(b, "rhs", "assigned", [current](ContextStore& s, Value v) { current(s).value = std::move(v); });
  b.edge("assigned", "column", sym(","), ",");
  b.edge("assigned", "cond", kw("where"), "where");
  add_end(b, "assigned");

  add_conditions(b, [](ContextStore& s, Comparison c) {
    auto& where = s.get<Update>("update").where;
    if (!where) where.emplace();
    where->conjuncts.push_back(std::move(c));
  });
  add_end(b, "cond_done");
  b.epsilon("semi", "accept", at_end, {}, "end of input");
  return std::move(b).build("start");
}

Machine delete_machine() {
  Builder b;
  for (const char* id : {"start", "from", "table", "semi"}) b.node(id);
  b.node("accept", true, accept_as<Delete>("delete"));
  b.edge("start", "from", kw("delete"), "delete");
  b.edge("from", "table", kw("from"), "from");
  b.node("after_table");
  b.edge("table", "after_table", ident, "table", [](ContextStore& s, const Token* t) {
    s.put("delete", Delete{t->text, std::nullopt});
  });
  b.edge("after_table", "cond", kw("where"), "where");
  add_end(b, "after_table");
  add_conditions(b, [](ContextStore& s, Comparison c) {
    auto& where = s.get<Delete>("delete").where;
    if (!where) where.emplace();
    where->conjuncts.push_back(std::move(c));
  });
  add_end(b, "cond_done");
  b.epsilon("semi", "accept", at_end, {}, "end of input");
  return std::move(b).build("start");
}

Machine create_machine() {
  Builder b;
  for (const char* id : {"start", "kind", "t_name", "t_open", "t_item", "t_col", "t_str",
                         "t_width", "t_width_close", "t_mod", "t_not", "t_pk", "t_close", "k_start",
                         "k_paren", "k_col", "k_op", "k_lit", "k_done", "x_name", "x_on",
                         "x_table", "x_open", "x_col", "x_col_close", "x_close", "semi"}) {
    b.node(id);
  }
  b.node("accept", true, [](ContextStore& s, const Token*) {
    if (s.contains("create_table")) return std::any(Statement(s.get<CreateTable>("create_table")));
    return std::any(Statement(s.get<CreateIndex>("create_index")));
  });
  auto column = [](ContextStore& s) -> ColumnDef& {
    return s.get<CreateTable>("create_table").columns.back();
  };
  auto check = [](ContextStore& s) -> CheckDef& {
    return s.get<CreateTable>("create_table").checks.back();
  };

  b.edge("start", "kind", kw("create"), "create");
  b.edge("kind", "t_name", kw("table"), "table");
  b.edge("kind", "x_name", kw("index"), "index");

  // create table <name> ( <column> | check ..., ... )
  b.edge("t_name", "t_open", ident, "table name", [](ContextStore& s, const Token* t) {
    s.put("create_table", CreateTable{t->text, {}, {}});
  });
  b.edge("t_open", "t_item", sym("("), "(");
  b.edge("t_item", "t_col", ident, "column name", [](ContextStore& s, const Token* t) {
    s.get<CreateTable>("create_table").columns.push_back(ColumnDef{t->text});
  });
  b.edge("t_item", "k_start", kw("check"), "check");
  b.edge("t_col", "t_mod", kw("int"), "int",
         [column](ContextStore& s, const Token*) { column(s).type = ColumnType::kInt; });
  b.edge("t_col", "t_str", kw("str"), "str",
         [column](ContextStore& s, const Token*) { column(s).type = ColumnType::kStr; });
  b.edge("t_str", "t_width", sym("("), "(");
  b.edge("t_width", "t_width_close", integer, "width", [column](ContextStore& s, const Token* t) {
    column(s).width = static_cast<int>(std::min<std::int64_t>(to_int(*t), INT_MAX));
  });
  b.edge("t_width_close", "t_mod", sym(")"), ")");
  b.edge("t_mod", "t_not", kw("not"), "not");
  b.edge("t_not", "t_mod", kw("null"), "null",
         [column](ContextStore& s, const Token*) { column(s).not_null = true; });
  b.edge("t_mod", "t_pk", kw("primary"), "primary");
  b.edge("t_pk", "t_mod", kw("key"), "key",
         [column](ContextStore& s, const Token*) { column(s).primary_key = true; });
  b.edge("t_mod", "t_item", sym(","), ",");
  b.edge("t_mod", "t_close", sym(")"), ")");

  // check ( <col> <op> <literal> ), parentheses optional
  b.edge("k_start", "k_paren", sym("("), "(",
         [](ContextStore& s, const Token*) { s.put(std::string(kCheckParen), true); });
  auto start_check = [](ContextStore& s, const Token* t) {
    s.get<CreateTable>("create_table").checks.push_back(CheckDef{t->text, CompareOp::kEq, Value{}});
  };
  b.edge("k_start", "k_col", ident, "column", [start_check](ContextStore& s, const Token* t) {
    s.put(std::string(kCheckParen), false);
    start_check(s, t);
  });
  b.edge("k_paren", "k_col", ident, "column", start_check);
  b.edge("k_col", "k_op", compare_op, "comparison operator",
         [check](ContextStore& s, const Token* t) { check(s).op = to_op(t->text); });
  add_literal(b, "k_op", "k_lit", [check](ContextStore& s, Value v) { check(s).literal = std::move(v); });
  b.edge("k_lit", "k_done", sym(")"), ")", {},
         [](ContextStore& s, const Token*) { return s.get<bool>(kCheckParen); });
  b.epsilon("k_lit", "k_done",
            [](ContextStore& s, const Token*) { return !s.get<bool>(kCheckParen); });
  b.edge("k_done", "t_item", sym(","), ",");
  b.edge("k_done", "t_close", sym(")"), ")");
  add_end(b, "t_close");

  // create index [<name>] on <table> ( <column> )
  b.edge("x_name", "x_table", kw("on"), "on");
  b.edge("x_name", "x_on", ident, "index name");
  b.edge("x_on", "x_table", kw("on"), "on");
  b.edge("x_table", "x_open", ident, "table", [](ContextStore& s, const Token* t) {
    s.put("create_index", CreateIndex{t->text, {}});
  });
  b.edge("x_open", "x_col", sym("("), "(");
  b.edge("x_col", "x_col_close", ident, "column",
         [](ContextStore& s, const Token* t) { s.get<CreateIndex>("create_index").column = t->text; });
  b.edge("x_col_close", "x_close", sym(")"), ")");
  add_end(b, "x_close");

  b.epsilon("semi", "accept", at_end, {}, "end of input");
  return std::move(b).build("start");
}

template <class T>
Machine keyword_machine(const char* keyword) {
  Builder b;
  b.node("start").node("word").node("semi");
  b.node("accept", true, [](ContextStore&, const Token*) { return std::any(Statement(T{})); });
  b.edge("start", "word", kw(keyword), keyword);
  add_end(b, "word");
  b.epsilon("semi", "accept", at_end, {}, "end of input");
  return std::move(b).build("start");
}

struct Machines {
  std::map<std::string, Machine, std::less<>> by_keyword;

  Machines() {
    by_keyword.emplace("select", select_machine());
    by_keyword.emplace("insert", insert_machine());
    by_keyword.emplace("update", update_machine());
    by_keyword.emplace("delete", delete_machine());
    by_keyword.emplace("create", create_machine());
    by_keyword.emplace("checkpoint", keyword_machine<Checkpoint>("checkpoint"));
    by_keyword.emplace("shutdown", keyword_machine<Shutdown>("shutdown"));
  }
};

const Machines& machines() {
  static const Machines m;
  return m;
}

std::string describe(std::span<const Token> tokens, std::size_t pos) {
  if (pos >= tokens.size()) return "at end of input";
  return "near '" + tokens[pos].text + "' (token " + std::to_string(pos) + ", offset " +
         std::to_string(tokens[pos].position) + ")";
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

}  // namespace

Statement parse(std::span<const Token> tokens, const ParseOptions& options) {
  const auto& table = machines().by_keyword;
  std::vector<std::string> leading;
  for (const auto& [k, v] : table) leading.push_back(k);

  const Machine* machine = nullptr;
  if (!tokens.empty() && tokens[0].kind == TokenKind::kKeyword) {
    auto it = table.find(tokens[0].text);
    if (it != table.end()) machine = &it->second;
  }
  if (machine == nullptr) {
    throw SyntaxError(0, leading, "syntax error " + describe(tokens, 0) + ": expected one of " + join(leading));
  }

  ContextStore store;
  automaton::RunOptions run_options;
  run_options.step_limit = options.step_limit;
  try {
    automaton::RunResult result = machine->run(tokens, store, run_options);
    if (options.trace != nullptr) {
      ParseTrace& t = *options.trace;
      t.steps = result.steps_taken;
      if (store.contains(kFrames)) {
        t.frame_pushes = store.get<std::size_t>(kPushes);
        t.frame_pops = store.get<std::size_t>(kPops);
        t.final_depth = store.depth(kFrames);
      }
    }
    return std::any_cast<Statement>(std::move(result.value));
  } catch (const automaton::Reject& r) {
    std::size_t pos = r.tokens_consumed();
    throw SyntaxError(pos, r.expected(),
                      "syntax error " + describe(tokens, pos) + ": expected " + join(r.expected()));
  } catch (const automaton::StepLimitExceeded& e) {
    std::size_t pos = e.tokens_consumed();
    throw SyntaxError(pos, {}, "statement too complex: step limit reached " + describe(tokens, pos));
  } catch (const automaton::HandlerError& h) {
    std::size_t pos = h.tokens_consumed() == 0 ? 0 : h.tokens_consumed() - 1;
    try {
      h.rethrow_cause();
    } catch (const DbError& e) {
      if (e.code() == ErrorCode::kSyntax) throw SyntaxError(pos, {}, e.what());
      throw;
    } catch (const std::exception& e) {
      throw DbError(ErrorCode::kInternal, std::string("parser handler failed: ") + e.what());
    }
  }
}

Statement parse(std::string_view text, const ParseOptions& options) {
  std::vector<Token> tokens = tokenize(text);
  return parse(std::span<const Token>(tokens), options);
}

}  // namespace autodb::sql
