#include "autodb/machines.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

namespace autodb::machines {

using automaton::ContextStore;
using automaton::MachineBuilder;

namespace {

auto word(std::string w) {
  return [w = std::move(w)](const std::string& t) { return t == w; };
}

bool is_integer(const std::string& t) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  return ec == std::errc() && p == t.data() + t.size();
}

bool is_name(const std::string& t) {
  if (t.empty() || !(std::isalpha(static_cast<unsigned char>(t[0])) || t[0] == '_')) return false;
  for (char c : t) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return t != "while";
}

Operand to_operand(const std::string& t) {
  if (is_integer(t)) {
    std::int64_t v = 0;
    std::from_chars(t.data(), t.data() + t.size(), v);
    return v;
  }
  return t;
}

std::int64_t eval(const Operand& op, const ContextStore& store) {
  if (const auto* v = std::get_if<std::int64_t>(&op)) return *v;
  return store.get<std::int64_t>(std::get<std::string>(op));
}

}  // namespace

bool Condition::holds(const ContextStore& store) const {
  return eval(lhs, store) < eval(rhs, store);
}

WordMachine balanced_parentheses_machine(std::size_t step_limit) {
  MachineBuilder<std::string> b;
  b.node("start").node("scan").node("accept", true, [](ContextStore& s, const std::string*) {
    return std::any(s.depth(kParenStack) == 0);
  });

  b.epsilon("start", "scan", {}, [](ContextStore& s, const std::string*) {
    s.put(std::string(kParenStack), ContextStore::Stack{});
  });
  b.edge("scan", "scan", word("("), "(", {}, [](ContextStore& s, const std::string* t) {
    s.push(kParenStack, *t);
    return true;
  });
  b.edge("scan", "scan", word(")"), ")", {}, [](ContextStore& s, const std::string*) {
    if (s.depth(kParenStack) == 0) return false;
    s.pop<std::string>(kParenStack);
    return true;
  });
  b.epsilon(
      "scan", "accept",
      [](ContextStore& s, const std::string* next) {
        return next == nullptr && s.depth(kParenStack) == 0;
      },
      {}, "end of input");
  return std::move(b).build("start", step_limit);
}

WordMachine while_interpreter_machine(std::size_t step_limit) {
  MachineBuilder<std::string> b;
  for (const char* id : {"start", "kw", "lparen", "lhs", "lt", "rhs", "rparen", "lbrace", "target",
                         "assign", "source", "plus", "amount", "test"}) {
    b.node(id);
  }
  b.node("done", true, [](ContextStore& s, const std::string*) {
    return std::any(s.get<std::int64_t>(s.get<Increment>(kBody).target));
  });
  b.node("execute", false, [](ContextStore& s, const std::string*) {
    const Increment& body = s.get<Increment>(kBody);
    s.put(body.target, s.get<std::int64_t>(body.source) + body.amount);
    ++s.get<std::int64_t>(kIterations);
    return std::any();
  });

  auto operand = [](const std::string& t) { return is_integer(t) || is_name(t); };

  b.edge("start", "kw", word("while"), "while", [](ContextStore& s, const std::string*) {
    s.push(kControlStack, std::string("while"));
    s.put(std::string(kIterations), std::int64_t{0});
  });
  b.edge("kw", "lparen", word("("), "(");
  b.edge("lparen", "lhs", operand, "operand", [](ContextStore& s, const std::string* t) {
    s.put("condition_lhs", to_operand(*t));
  });
  b.edge("lhs", "lt", word("<"), "<");
  b.edge("lt", "rhs", operand, "operand", [](ContextStore& s, const std::string* t) {
    Condition c{s.get<Operand>("condition_lhs"), to_operand(*t)};
    s.erase("condition_lhs");
    s.put(std::string(kCondition), std::move(c));
  });
  b.edge("rhs", "rparen", word(")"), ")");
  b.edge("rparen", "lbrace", word("{"), "{");
  b.edge("lbrace", "target", is_name, "variable", [](ContextStore& s, const std::string* t) {
    s.put(std::string(kBody), Increment{*t, {}, 0});
  });
  b.edge("target", "assign", word("="), "=");
  b.edge("assign", "source", is_name, "variable", [](ContextStore& s, const std::string* t) {
    s.get<Increment>(kBody).source = *t;
  });
  b.edge("source", "plus", word("+"), "+");
  b.edge("plus", "amount", is_integer, "integer", [](ContextStore& s, const std::string* t) {
    s.get<Increment>(kBody).amount = std::get<std::int64_t>(to_operand(*t));
  });
  b.edge("amount", "test", word("}"), "}");

  // The two edges leaving "test" consult the stored condition in their
  // before_shift handlers: loop back through the body while it holds, leave
  // otherwise.
  b.epsilon("test", "execute",
            [](ContextStore& s, const std::string*) {
              return s.get<Condition>(kCondition).holds(s);
            },
            {}, "loop");
  b.epsilon(
      "test", "done",
      [](ContextStore& s, const std::string*) { return !s.get<Condition>(kCondition).holds(s); },
      [](ContextStore& s, const std::string*) { s.pop<std::string>(kControlStack); }, "exit");
  b.epsilon("execute", "test", {}, {});

  return std::move(b).build("start", step_limit);
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace autodb::machines
