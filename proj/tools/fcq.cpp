// fcq: command-line front end for the query engine.
//
// exit codes: 0 true / results, 1 false / empty / cyclic, 2 usage or parse
// error, 3 internal error (including --oracle disagreement).

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "fcq/fcq.hpp"

namespace {

using namespace fcq;

constexpr int kTrue = 0, kFalse = 1, kUsage = 2, kInternal = 3;
// the oracle is exponential in the number of variables; refuse long words
constexpr std::size_t kOracleMaxWord = 16;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Exit {
  int code;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::string read_word(const std::string& path, const Alphabet& sigma) {
  std::string w = read_file(path);
  if (!w.empty() && w.back() == '\n') w.pop_back();
  for (char c : w)
    if (!sigma.contains(c)) throw UsageError(std::string("word symbol '") + c + "' is not in the alphabet");
  return w;
}

struct Options {
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::string query_file, word_file;
  bool oracle = false, explain = false, require_acyclic = false, prefactor = false;
  bool json = false;
  long limit = -1;
  std::string sub, literal;
  std::size_t k = 2;
  std::string direction, in_file, out_file;
  bool acyclic_only = false;
};

// One CQ of the input list, planned once.
struct Prepared {
  FcCq query;
  PlanResult result;
};

std::vector<Prepared> prepare(const Options& o, const Alphabet& sigma) {
  std::vector<Prepared> out;
  for (auto& q : parse_queries(read_file(o.query_file), sigma)) {
    PlanResult r = plan(q, PlanOptions{o.prefactor});
    if (o.explain) std::cerr << explain(r);
    if (!r.acyclic) {
      if (o.require_acyclic) {
        std::cerr << "cyclic: " << r.reason << "\n";
        throw Exit{kFalse};
      }
      std::cerr << "warning: query is cyclic (" << r.reason << "), evaluating with the brute-force oracle\n";
    }
    out.push_back({std::move(q), std::move(r)});
  }
  return out;
}

WordTuples engine_words(const Prepared& p, const std::string& w, const WordIndex& ix) {
  if (!p.result.acyclic) return brute_evaluate(p.query, w);
  WordTuples out;
  enumerate(*p.result.plan, ix, [&](const ResultTuple& t) {
    std::vector<std::string> row;
    for (VarId h : p.query.head) row.emplace_back(ix.text(t.at(h)));
    out.insert(std::move(row));
    return true;
  });
  return out;
}

void cross_check(const Prepared& p, const std::string& w, const WordIndex& ix) {
  if (w.size() > kOracleMaxWord) {
    std::cerr << "warning: word longer than " << kOracleMaxWord << ", oracle cross-check skipped\n";
    return;
  }
  if (engine_words(p, w, ix) != brute_evaluate(p.query, w))
    throw InternalError("engine and oracle disagree on " + print_query(p.query));
}

int cmd_check(const Options& o) {
  Alphabet sigma(o.alphabet);
  auto qs = prepare(o, sigma);
  std::string w = read_word(o.word_file, sigma);
  WordIndex ix(w);
  bool any = false;
  for (const auto& p : qs) {
    bool v = p.result.acyclic ? model_check(*p.result.plan, ix) : brute_model_check(p.query, w);
    if (o.oracle) {
      cross_check(p, w, ix);
      if (v != brute_model_check(p.query, w)) throw InternalError("engine and oracle disagree on model checking");
    }
    any = any || v;
  }
  std::cout << (any ? "true" : "false") << "\n";
  return any ? kTrue : kFalse;
}

int cmd_enum(const Options& o) {
  Alphabet sigma(o.alphabet);
  auto qs = prepare(o, sigma);
  std::string w = read_word(o.word_file, sigma);
  WordIndex ix(w);
  std::set<std::vector<std::string>> seen;
  long emitted = 0;
  bool nonempty = false;
  auto emit = [&](const FcCq& q, const std::vector<std::string>& row) {
    nonempty = true;
    if (o.limit >= 0 && emitted >= o.limit) return false;
    if (!seen.insert(row).second) return true;
    ++emitted;
    if (o.json) {
      nlohmann::json obj = nlohmann::json::object();
      for (std::size_t i = 0; i < row.size(); ++i) {
        auto id = ix.lookup(row[i]);
        if (!id) throw InternalError("result word is not a factor");
        Span s = ix.canonical_span(*id);
        obj[q.vars.name(q.head[i])] = {{"word", row[i]}, {"span", {s.start, s.end}}};
      }
      std::cout << obj.dump() << "\n";
    } else {
      for (std::size_t i = 0; i < row.size(); ++i)
        std::cout << (i ? " " : "") << q.vars.name(q.head[i]) << "=" << row[i];
      std::cout << "\n";
    }
    return !(o.limit >= 0 && emitted >= o.limit);
  };
  for (const auto& p : qs) {
    if (o.oracle) cross_check(p, w, ix);
    bool go_on = true;
    if (p.result.acyclic) {
      enumerate(*p.result.plan, ix, [&](const ResultTuple& t) {
        std::vector<std::string> row;
        for (VarId h : p.query.head) row.emplace_back(ix.text(t.at(h)));
        return go_on = emit(p.query, row);
      });
    } else {
      for (const auto& row : brute_evaluate(p.query, w))
        if (!(go_on = emit(p.query, row))) break;
    }
    if (!go_on && o.limit >= 0 && emitted >= o.limit) break;
  }
  return nonempty ? kTrue : kFalse;
}

int cmd_plan(const Options& o) {
  Alphabet sigma(o.alphabet);
  int rc = kFalse;
  for (auto& q : parse_queries(read_file(o.query_file), sigma)) {
    PlanResult r = plan(q, PlanOptions{o.prefactor});
    std::cout << explain(r);
    if (r.acyclic) rc = kTrue;
  }
  return rc;
}

void print_two(const TwoFcCq& q) {
  for (const auto& e : q.equations) std::cout << format_equation(e, q.vars) << "\n";
  for (const auto& c : q.constraints) std::cout << q.vars.name(c.var) << " in /" << print_regex(c.regex) << "/\n";
}

int cmd_pattern(const Options& o) {
  Alphabet sigma(o.alphabet);
  VarTable vars;
  if (o.sub == "acyclic" && o.literal.find('(') != std::string::npos) {
    Bracketing b = parse_bracketing(o.literal, vars);
    bool ok = bracketing_gyo_acyclic(b);
    std::cout << (ok ? "acyclic" : "cyclic") << "\n";
    return ok ? kTrue : kFalse;
  }
  Pattern alpha = parse_pattern(o.literal, vars, sigma);
  // terminal blocks become fresh variables with a constraint each
  auto tf = terminal_free_core(alpha, vars);
  Pattern core;
  for (VarId v : tf.core) core.push_back(Term::of(v));
  auto show_blocks = [&](const VarTable& t) {
    for (const auto& [z, block] : tf.blocks) std::cout << t.name(z) << " in /'" << block << "'/\n";
  };
  if (o.sub == "acyclic") {
    auto b = find_acyclic_bracketing(tf.core);
    if (!b) {
      std::cout << "cyclic\n";
      return kFalse;
    }
    std::cout << "acyclic\nwitness: " << format_bracketing(*b, vars) << "\n";
    show_blocks(vars);
    return kTrue;
  }
  std::optional<TwoFcCq> d = o.sub == "decompose" ? find_acyclic_decomposition(core, kUniverse, vars)
                                                  : k_ary_local_decomposition(core, o.k, kUniverse, vars);
  if (!d) {
    if (o.sub == "decompose")
      std::cout << "cyclic\n";
    else
      std::cout << "not " << o.k << "-local\n";
    return kFalse;
  }
  print_two(*d);
  show_blocks(d->vars);
  return kTrue;
}

int cmd_convert(const Options& o) {
  Alphabet sigma(o.alphabet);
  std::string text = read_file(o.in_file);
  if (o.direction == "sercq2fc") {
    SercqAst p = parse_sercq(text, sigma);
    FcCq q;
    if (o.acyclic_only) {
      try {
        q = pseudo_acyclic_to_acyclic_fccq(p);
      } catch (const NotPseudoAcyclic& e) {
        std::cerr << "not pseudo-acyclic: " << e.what() << "\n";
        return kFalse;
      }
      if (!plan(q).acyclic) throw InternalError("pseudo-acyclic conversion produced a cyclic query");
    } else {
      q = sercq_to_fccq(p);
    }
    write_file(o.out_file, print_query(q) + "\n");
  } else {
    auto qs = parse_queries(text, sigma);
    if (qs.size() != 1) throw UsageError("fc2sercq expects exactly one query");
    write_file(o.out_file, print_sercq(fccq_to_sercq(qs[0], sigma)) + "\n");
  }
  return kTrue;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conjunctive queries over word equations"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--alphabet", o.alphabet, "terminal symbols")->capture_default_str();

  auto eval_flags = [&](CLI::App* c) {
    c->add_option("query", o.query_file, "query file (.fcq)")->required();
    c->add_option("word", o.word_file, "word file")->required();
    c->add_flag("--oracle", o.oracle, "cross-check against the brute-force oracle");
    c->add_flag("--explain", o.explain, "print the plan on stderr");
    c->add_flag("--require-acyclic", o.require_acyclic, "fail instead of falling back to the oracle");
    c->add_flag("--prefactor", o.prefactor, "factor out common prefixes before planning");
  };
  auto* check = app.add_subcommand("check", "model check a query on a word");
  eval_flags(check);
  auto* en = app.add_subcommand("enum", "enumerate query results");
  eval_flags(en);
  en->add_option("--limit", o.limit, "stop after N results");
  en->add_flag("--json", o.json, "JSON lines output");

  auto* pat = app.add_subcommand("pattern", "pattern acyclicity and decompositions");
  pat->add_option("mode", o.sub)->required()->check(CLI::IsMember({"acyclic", "decompose", "k-local"}));
  pat->add_option("pattern", o.literal, "pattern or bracketing literal")->required();
  pat->add_option("--k", o.k, "arity for k-local")->check(CLI::Range(2, 64));

  auto* conv = app.add_subcommand("convert", "translate between spanners and FC queries");
  conv->add_option("direction", o.direction)->required()->check(CLI::IsMember({"sercq2fc", "fc2sercq"}));
  conv->add_option("in", o.in_file)->required();
  conv->add_option("out", o.out_file, "output file, - for stdout")->required();
  conv->add_flag("--acyclic", o.acyclic_only, "use the acyclic construction for pseudo-acyclic input");

  auto* pl = app.add_subcommand("plan", "print the evaluation plan");
  pl->add_option("query", o.query_file)->required();
  pl->add_flag("--prefactor", o.prefactor);

  for (auto* c : {check, en, pat, conv, pl}) c->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    Alphabet check_alphabet(o.alphabet);
  } catch (const fcq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*check) return cmd_check(o);
    if (*en) return cmd_enum(o);
    if (*pat) return cmd_pattern(o);
    if (*conv) return cmd_convert(o);
    return cmd_plan(o);
  } catch (const Exit& e) {
    return e.code;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  } catch (const fcq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
