#include "repcrash/workload_dsl.hpp"

#include <cctype>
#include <vector>

#include "repcrash/error.hpp"

namespace repcrash {

namespace {

enum class Tok { kWord, kString, kLBrace, kRBrace, kEnd, kEof };

struct Token {
  Tok type;
  std::string text;
  std::size_t line;
  std::size_t column;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n' || c == ';') {
      out.push_back({Tok::kEnd, std::string(1, c), line, col});
      advance();
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
    } else if (c == '{') {
      out.push_back({Tok::kLBrace, "{", line, col});
      advance();
    } else if (c == '}') {
      out.push_back({Tok::kRBrace, "}", line, col});
      advance();
    } else if (c == '"') {
      Token t{Tok::kString, "", line, col};
      advance();
      bool closed = false;
      while (i < src.size()) {
        char d = src[i];
        if (d == '"') {
          advance();
          closed = true;
          break;
        }
        if (d == '\n') break;
        if (d == '\\') {
          if (i + 1 >= src.size()) break;
          char e = src[i + 1];
          switch (e) {
            case 'n': t.text.push_back('\n'); advance(2); break;
            case 't': t.text.push_back('\t'); advance(2); break;
            case '\\': t.text.push_back('\\'); advance(2); break;
            case '"': t.text.push_back('"'); advance(2); break;
            case 'x': {
              if (i + 3 >= src.size() ||
                  !std::isxdigit(static_cast<unsigned char>(src[i + 2])) ||
                  !std::isxdigit(static_cast<unsigned char>(src[i + 3]))) {
                throw DslError(line, col, "bad \\x escape");
              }
              t.text.push_back(static_cast<char>(
                  std::stoi(std::string(src.substr(i + 2, 2)), nullptr, 16)));
              advance(4);
              break;
            }
            default:
              throw DslError(line, col, std::string("unknown escape \\") + e);
          }
          continue;
        }
        t.text.push_back(d);
        advance();
      }
      if (!closed) throw DslError(t.line, t.column, "unterminated string");
      out.push_back(std::move(t));
    } else {
      Token t{Tok::kWord, "", line, col};
      while (i < src.size()) {
        char d = src[i];
        if (std::isspace(static_cast<unsigned char>(d)) || d == '{' ||
            d == '}' || d == ';' || d == '"' || d == '#') {
          break;
        }
        t.text.push_back(d);
        advance();
      }
      out.push_back(std::move(t));
    }
  }
  out.push_back({Tok::kEof, "", line, col});
  return out;
}

struct Scope {
  std::string function;
  std::size_t header_line;
};

class Compiler {
 public:
  Compiler(std::vector<Token> toks, Mode mode, std::string_view file)
      : toks_(std::move(toks)), mode_(mode), file_(file) {
    trace_.meta.app_name = "workload";
    trace_.meta.mode = mode;
  }

  Trace run() {
    while (peek().type != Tok::kEof) {
      const Token& t = peek();
      if (t.type == Tok::kEnd) {
        ++pos_;
      } else if (t.type == Tok::kWord && t.text == "fn") {
        block();
      } else {
        fail(t, "statements must appear inside a fn block");
      }
    }
    return std::move(trace_);
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }

  [[noreturn]] void fail(const Token& t, const std::string& what) const {
    throw DslError(t.line, t.column, what);
  }

  void block() {
    const Token& kw = take();
    const Token& name = take();
    if (name.type != Tok::kWord) fail(name, "expected function name after fn");
    if (take().type != Tok::kLBrace) fail(name, "expected '{' after fn " + name.text);
    scopes_.push_back({name.text, kw.line});
    for (;;) {
      const Token& t = peek();
      if (t.type == Tok::kEof) fail(t, "unterminated fn " + name.text);
      if (t.type == Tok::kRBrace) {
        ++pos_;
        break;
      }
      if (t.type == Tok::kEnd) {
        ++pos_;
        continue;
      }
      if (t.type != Tok::kWord) fail(t, "expected a statement");
      if (t.text == "fn") {
        block();
      } else {
        statement();
      }
    }
    scopes_.pop_back();
  }

  // Collects the statement's tokens up to a terminator.
  std::vector<Token> line_tokens() {
    std::vector<Token> out;
    while (peek().type != Tok::kEnd && peek().type != Tok::kRBrace &&
           peek().type != Tok::kEof) {
      if (peek().type == Tok::kLBrace) fail(peek(), "unexpected '{'");
      out.push_back(take());
    }
    return out;
  }

  std::uint64_t number(const Token& t, std::string_view text) const {
    if (text.empty()) fail(t, "expected a number");
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(std::string(text), &used, 0);
    } catch (const std::exception&) {
      fail(t, "expected a number, got '" + std::string(text) + "'");
    }
    if (used != text.size()) fail(t, "expected a number, got '" + std::string(text) + "'");
    return v;
  }

  // Accepts "@N" or "@" "N"; advances idx past what it consumed.
  std::uint64_t at_number(const std::vector<Token>& ts, std::size_t& idx,
                          const Token& stmt) const {
    if (idx >= ts.size()) fail(stmt, "expected @NUMBER");
    const Token& t = ts[idx];
    if (t.type != Tok::kWord || t.text.empty() || t.text[0] != '@') {
      fail(t, "expected @NUMBER");
    }
    if (t.text.size() > 1) {
      ++idx;
      return number(t, std::string_view(t.text).substr(1));
    }
    if (idx + 1 >= ts.size()) fail(t, "expected a number after @");
    idx += 2;
    return number(ts[idx - 1], ts[idx - 1].text);
  }

  Backtrace backtrace_at(std::size_t line) const {
    Backtrace bt;
    for (std::size_t i = 0; i < scopes_.size(); ++i) {
      std::size_t l = i + 1 < scopes_.size() ? scopes_[i + 1].header_line : line;
      bt.push_back({scopes_[i].function, file_, static_cast<std::uint32_t>(l)});
    }
    return bt;
  }

  void statement() {
    const Token head = take();
    std::vector<Token> args = line_tokens();
    const std::string& kw = head.text;

    auto want = [&](std::size_t n) {
      if (args.size() != n) {
        fail(head, kw + " expects " + std::to_string(n) + " argument(s)");
      }
    };
    auto word = [&](std::size_t i) -> const std::string& {
      if (args[i].type != Tok::kWord) fail(args[i], "expected a name");
      return args[i].text;
    };

    Operation op;
    op.seq = trace_.ops.size() + 1;
    op.tid = 0;
    op.backtrace = backtrace_at(head.line);
    OpArgs& a = op.args;

    if (kw == "write" || kw == "pwrite") {
      if (args.size() < 3) fail(head, kw + " expects PATH \"BYTES\" @OFFSET");
      op.kind = kw == "write" ? OpKind::kWrite : OpKind::kPwrite;
      a.path = word(0);
      if (args[1].type != Tok::kString) fail(args[1], "expected a quoted payload");
      Bytes bytes(args[1].text.begin(), args[1].text.end());
      std::size_t idx = 2;
      a.offset = at_number(args, idx, head);
      if (idx != args.size()) fail(args[idx], "trailing tokens");
      a.length = bytes.size();
      a.payload = Payload::from_bytes(bytes);
    } else if (kw == "rename") {
      want(2);
      op.kind = OpKind::kRename;
      a.path = word(0);
      a.target = word(1);
    } else if (kw == "unlink" || kw == "create" || kw == "mkdir" ||
               kw == "open" || kw == "close" || kw == "fsync" ||
               kw == "fdatasync") {
      want(1);
      op.kind = parse_kind(kw);
      a.path = word(0);
    } else if (kw == "fsyncdir") {
      want(1);
      op.kind = OpKind::kFsync;
      a.path = word(0);
      a.directory = true;
    } else if (kw == "sync") {
      want(0);
      op.kind = OpKind::kSync;
    } else if (kw == "store") {
      if (args.size() < 4) fail(head, "store expects TYPE.INSTANCE.FIELD @ADDR LEN \"BYTES\"");
      op.kind = OpKind::kStore;
      const std::string& target = word(0);
      auto last = target.rfind('.');
      auto mid = last == std::string::npos || last == 0
                     ? std::string::npos
                     : target.rfind('.', last - 1);
      if (mid == std::string::npos || mid == 0 || last + 1 == target.size() ||
          mid + 1 == last) {
        fail(args[0], "store target must be TYPE.INSTANCE.FIELD");
      }
      op.annotation = Annotation{target.substr(0, mid),
                                 target.substr(mid + 1, last - mid - 1),
                                 target.substr(last + 1)};
      std::size_t idx = 1;
      a.addr = at_number(args, idx, head);
      if (idx + 2 != args.size()) fail(head, "store expects LEN \"BYTES\" after the address");
      a.length = number(args[idx], args[idx].text);
      if (args[idx + 1].type != Tok::kString) fail(args[idx + 1], "expected a quoted payload");
      Bytes bytes(args[idx + 1].text.begin(), args[idx + 1].text.end());
      if (bytes.size() != a.length) {
        fail(args[idx + 1], "payload is " + std::to_string(bytes.size()) +
                                " bytes but LEN is " + std::to_string(a.length));
      }
      a.cache_line = a.addr / 64;
      a.payload = Payload::from_bytes(bytes);
    } else if (kw == "flush" || kw == "msync") {
      want(2);
      op.kind = kw == "flush" ? OpKind::kFlush : OpKind::kMsync;
      a.addr = number(args[0], args[0].text);
      a.length = number(args[1], args[1].text);
    } else if (kw == "fence") {
      want(0);
      op.kind = OpKind::kFence;
    } else {
      fail(head, "unknown statement '" + kw + "'");
    }

    if (mode_of(op.kind) != mode_) {
      fail(head, "'" + kw + "' is not allowed in " + std::string(to_string(mode_)) +
                     " mode");
    }
    trace_.ops.push_back(std::move(op));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Mode mode_;
  std::string file_;
  std::vector<Scope> scopes_;
  Trace trace_;
};

}  // namespace

Trace synth_workload(std::string_view program, Mode mode,
                     std::string_view source_name) {
  return Compiler(tokenize(program), mode, source_name).run();
}

}  // namespace repcrash
