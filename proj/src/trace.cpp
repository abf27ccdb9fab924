#include "repcrash/trace.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include <json.hpp>

#include "repcrash/error.hpp"

namespace repcrash {

using ojson = nlohmann::ordered_json;

namespace {

struct KindName {
  OpKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 15> kKindNames{{
    {OpKind::kWrite, "write"},
    {OpKind::kPwrite, "pwrite"},
    {OpKind::kRename, "rename"},
    {OpKind::kUnlink, "unlink"},
    {OpKind::kCreate, "create"},
    {OpKind::kFsync, "fsync"},
    {OpKind::kFdatasync, "fdatasync"},
    {OpKind::kSync, "sync"},
    {OpKind::kOpen, "open"},
    {OpKind::kClose, "close"},
    {OpKind::kMkdir, "mkdir"},
    {OpKind::kStore, "store"},
    {OpKind::kFlush, "flush"},
    {OpKind::kFence, "fence"},
    {OpKind::kMsync, "msync"},
}};

bool has_payload(OpKind kind) {
  return kind == OpKind::kWrite || kind == OpKind::kPwrite ||
         kind == OpKind::kStore;
}

ojson args_to_json(const Operation& op) {
  const OpArgs& a = op.args;
  ojson j = ojson::object();
  switch (op.kind) {
    case OpKind::kWrite:
    case OpKind::kPwrite:
      j["path"] = a.path;
      j["offset"] = a.offset;
      j["length"] = a.length;
      break;
    case OpKind::kRename:
      j["path"] = a.path;
      j["target"] = a.target;
      break;
    case OpKind::kFsync:
      j["path"] = a.path;
      if (a.directory) j["dir"] = true;
      break;
    case OpKind::kUnlink:
    case OpKind::kCreate:
    case OpKind::kFdatasync:
    case OpKind::kOpen:
    case OpKind::kClose:
    case OpKind::kMkdir:
      j["path"] = a.path;
      break;
    case OpKind::kSync:
    case OpKind::kFence:
      break;
    case OpKind::kStore:
      j["addr"] = a.addr;
      j["length"] = a.length;
      break;
    case OpKind::kFlush:
    case OpKind::kMsync:
      j["addr"] = a.addr;
      j["length"] = a.length;
      break;
  }
  if (has_payload(op.kind) && a.payload) {
    j["digest"] = a.payload->digest;
    if (a.payload->data) j["data"] = to_hex(*a.payload->data);
  }
  if (op.kind == OpKind::kStore) j["line"] = a.cache_line;
  return j;
}

class RecordReader {
 public:
  RecordReader(const ojson& j, std::size_t line) : j_(j), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_, what);
  }

  const ojson& field(const ojson& obj, const char* key) const {
    if (!obj.is_object()) fail("expected a JSON object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing key '") + key + "'");
    return *it;
  }

  std::uint64_t uint_field(const ojson& obj, const char* key) const {
    const ojson& v = field(obj, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(std::string("key '") + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string string_field(const ojson& obj, const char* key) const {
    const ojson& v = field(obj, key);
    if (!v.is_string()) fail(std::string("key '") + key + "' must be a string");
    return v.get<std::string>();
  }

  const ojson& root() const { return j_; }

 private:
  const ojson& j_;
  std::size_t line_;
};

Operation parse_op(const ojson& j, std::size_t line, Mode mode) {
  RecordReader r(j, line);
  Operation op;
  op.seq = r.uint_field(j, "seq");
  if (op.seq == 0) r.fail("seq must be positive");
  op.tid = static_cast<std::uint32_t>(r.uint_field(j, "tid"));
  op.kind = parse_kind(r.string_field(j, "kind"));
  if (mode_of(op.kind) != mode) {
    r.fail("kind '" + std::string(to_string(op.kind)) + "' in a " +
           std::string(to_string(mode)) + " trace");
  }

  const ojson& args = r.field(j, "args");
  if (!args.is_object()) r.fail("args must be an object");
  OpArgs& a = op.args;
  switch (op.kind) {
    case OpKind::kWrite:
    case OpKind::kPwrite:
      a.path = r.string_field(args, "path");
      a.offset = r.uint_field(args, "offset");
      a.length = r.uint_field(args, "length");
      break;
    case OpKind::kRename:
      a.path = r.string_field(args, "path");
      a.target = r.string_field(args, "target");
      break;
    case OpKind::kFsync:
      a.path = r.string_field(args, "path");
      if (auto it = args.find("dir"); it != args.end()) {
        if (!it->is_boolean()) r.fail("dir must be a boolean");
        a.directory = it->get<bool>();
      }
      break;
    case OpKind::kUnlink:
    case OpKind::kCreate:
    case OpKind::kFdatasync:
    case OpKind::kOpen:
    case OpKind::kClose:
    case OpKind::kMkdir:
      a.path = r.string_field(args, "path");
      break;
    case OpKind::kSync:
    case OpKind::kFence:
      break;
    case OpKind::kStore:
    case OpKind::kFlush:
    case OpKind::kMsync:
      a.addr = r.uint_field(args, "addr");
      a.length = r.uint_field(args, "length");
      break;
  }
  if (op.kind == OpKind::kStore) {
    a.cache_line = args.contains("line") ? r.uint_field(args, "line")
                                         : a.addr / 64;
  }
  if (has_payload(op.kind)) {
    Payload p;
    p.digest = r.string_field(args, "digest");
    if (auto it = args.find("data"); it != args.end() && !it->is_null()) {
      if (!it->is_string()) r.fail("data must be a hex string");
      auto bytes = from_hex(it->get<std::string>());
      if (!bytes) r.fail("data is not valid hex");
      if (bytes->size() > kMaxInlinePayload) r.fail("inline data exceeds 256 bytes");
      if (bytes->size() != a.length) r.fail("inline data length differs from length");
      if (payload_digest(*bytes) != p.digest) r.fail("inline data does not match digest");
      p.data = std::move(*bytes);
    }
    a.payload = std::move(p);
  }

  const ojson& bt = r.field(j, "backtrace");
  if (!bt.is_array() || bt.empty()) r.fail("backtrace must be a non-empty array");
  for (const auto& f : bt) {
    Frame frame;
    frame.function = r.string_field(f, "function_name");
    frame.file = r.string_field(f, "file");
    std::uint64_t l = r.uint_field(f, "line");
    if (l == 0) r.fail("frame line must be positive");
    frame.line = static_cast<std::uint32_t>(l);
    op.backtrace.push_back(std::move(frame));
  }

  const ojson& ann = r.field(j, "annotation");
  if (!ann.is_null()) {
    if (mode == Mode::kPosix) r.fail("POSIX operations cannot carry annotations");
    Annotation an;
    an.type_name = r.string_field(ann, "type_name");
    an.instance_id = r.string_field(ann, "instance_id");
    an.field_name = r.string_field(ann, "field_name");
    op.annotation = std::move(an);
  }
  return op;
}

}  // namespace

std::string_view to_string(Mode mode) {
  return mode == Mode::kPosix ? "POSIX" : "MMIO";
}

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "POSIX" || text == "posix") return Mode::kPosix;
  if (text == "MMIO" || text == "mmio") return Mode::kMmio;
  return std::nullopt;
}

std::string_view to_string(OpKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

OpKind parse_kind(std::string_view text) {
  for (const auto& k : kKindNames) {
    if (k.name == text) return k.kind;
  }
  throw UnknownOperationKind(std::string(text));
}

Mode mode_of(OpKind kind) {
  switch (kind) {
    case OpKind::kStore:
    case OpKind::kFlush:
    case OpKind::kFence:
    case OpKind::kMsync:
      return Mode::kMmio;
    default:
      return Mode::kPosix;
  }
}

bool is_update(OpKind kind) {
  switch (kind) {
    case OpKind::kWrite:
    case OpKind::kPwrite:
    case OpKind::kRename:
    case OpKind::kUnlink:
    case OpKind::kCreate:
    case OpKind::kMkdir:
    case OpKind::kStore:
      return true;
    default:
      return false;
  }
}

bool is_ordering(OpKind kind) {
  switch (kind) {
    case OpKind::kFsync:
    case OpKind::kFdatasync:
    case OpKind::kSync:
    case OpKind::kFlush:
    case OpKind::kFence:
    case OpKind::kMsync:
      return true;
    default:
      return false;
  }
}

const Operation* Trace::find(std::uint64_t seq) const {
  auto it = std::lower_bound(
      ops.begin(), ops.end(), seq,
      [](const Operation& op, std::uint64_t s) { return op.seq < s; });
  if (it == ops.end() || it->seq != seq) return nullptr;
  return &*it;
}

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  std::uint64_t prev_seq = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    ojson j;
    try {
      j = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("malformed record: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "record is not a JSON object");
    if (!have_header) {
      RecordReader r(j, line_no);
      trace.meta.app_name = r.string_field(j, "app");
      auto mode = parse_mode(r.string_field(j, "mode"));
      if (!mode) r.fail("mode must be POSIX or MMIO");
      trace.meta.mode = *mode;
      if (r.uint_field(j, "version") != 1) r.fail("unsupported trace version");
      have_header = true;
      continue;
    }
    Operation op = parse_op(j, line_no, trace.meta.mode);
    if (!trace.ops.empty() && op.seq <= prev_seq) {
      throw SequenceOrderError(prev_seq, op.seq);
    }
    prev_seq = op.seq;
    trace.ops.push_back(std::move(op));
  }
  return trace;
}

Trace parse_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

std::string serialize_trace(const Trace& trace) {
  std::string out;
  ojson header;
  header["app"] = trace.meta.app_name;
  header["mode"] = to_string(trace.meta.mode);
  header["version"] = 1;
  out += header.dump();
  out += '\n';
  for (const auto& op : trace.ops) {
    ojson j;
    j["seq"] = op.seq;
    j["tid"] = op.tid;
    j["kind"] = to_string(op.kind);
    j["args"] = args_to_json(op);
    ojson bt = ojson::array();
    for (const auto& f : op.backtrace) {
      ojson fj;
      fj["function_name"] = f.function;
      fj["file"] = f.file;
      fj["line"] = f.line;
      bt.push_back(std::move(fj));
    }
    j["backtrace"] = std::move(bt);
    if (op.annotation) {
      ojson a;
      a["type_name"] = op.annotation->type_name;
      a["instance_id"] = op.annotation->instance_id;
      a["field_name"] = op.annotation->field_name;
      j["annotation"] = std::move(a);
    } else {
      j["annotation"] = nullptr;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::map<std::uint32_t, std::vector<Operation>> split_by_thread(
    const Trace& trace) {
  std::map<std::uint32_t, std::vector<Operation>> out;
  for (const auto& op : trace.ops) out[op.tid].push_back(op);
  return out;
}

std::string format_frame(const Frame& frame) {
  return frame.function + "@" + frame.file + ":" + std::to_string(frame.line);
}

}  // namespace repcrash
