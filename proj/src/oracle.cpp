#include "regen/oracle.hpp"

#include <cctype>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "regen/error.hpp"
#include "regen/util.hpp"

namespace regen {

namespace {

bool is_var_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

}  // namespace

std::string render_prompt(TemplateId id, const VarMap& vars) {
  std::string_view text = template_text(id);
  std::string out;
  out.reserve(text.size() + 256);
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_var_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        std::string name(text.substr(i + 1, j - i - 1));
        auto it = vars.find(name);
        if (it == vars.end()) {
          fail(ErrorKind::kPrecondition, "template '" + std::string(to_string(id)) +
                                             "': unbound variable {" + name + "}");
        }
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

std::string OracleRequest::hash() const { return hex64(fnv1a64(prompt())); }

// ---- transcripts ----------------------------------------------------------

std::vector<TranscriptRecord> parse_transcript(std::string_view text, const std::string& origin) {
  Json doc = parse_json(text, origin);
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
    fail(ErrorKind::kParse, origin + ": records: expected an array");
  }
  std::vector<TranscriptRecord> records;
  for (std::size_t i = 0; i < doc["records"].size(); ++i) {
    const Json& r = doc["records"][i];
    std::string where = origin + ": records[" + std::to_string(i) + "]";
    if (!r.is_object()) fail(ErrorKind::kParse, where + ": expected an object");
    TranscriptRecord rec;
    if (!r.contains("template_id") || !r["template_id"].is_string()) {
      fail(ErrorKind::kParse, where + ".template_id: missing");
    }
    auto tid = parse_template_id(r["template_id"].get<std::string>());
    if (!tid) fail(ErrorKind::kParse, where + ".template_id: unknown template");
    rec.template_id = *tid;
    if (r.contains("vars")) {
      if (!r["vars"].is_object()) fail(ErrorKind::kParse, where + ".vars: expected an object");
      for (const auto& [k, v] : r["vars"].items()) {
        if (!v.is_string()) fail(ErrorKind::kParse, where + ".vars." + k + ": expected a string");
        rec.vars[k] = v.get<std::string>();
      }
    }
    if (!r.contains("response") || !r["response"].is_string()) {
      fail(ErrorKind::kParse, where + ".response: missing");
    }
    rec.response = r["response"].get<std::string>();
    records.push_back(std::move(rec));
  }
  return records;
}

std::string serialize_transcript(const std::vector<TranscriptRecord>& records) {
  Json doc = Json::object();
  doc["records"] = Json::array();
  for (const auto& rec : records) {
    Json r = Json::object();
    r["template_id"] = std::string(to_string(rec.template_id));
    Json vars = Json::object();
    for (const auto& [k, v] : rec.vars) vars[k] = v;
    r["vars"] = std::move(vars);
    r["response"] = rec.response;
    doc["records"].push_back(std::move(r));
  }
  return dump_json(doc);
}

// ---- handle ---------------------------------------------------------------

struct OracleHandle::State {
  Backend backend = Backend::kScripted;
  Decoding decoding;
  std::string digest;
  std::unordered_map<std::string, std::string> responses;  // prompt hash -> text
  RemoteConfig remote;
  Transport transport;
  mutable std::mutex mu;
  mutable std::vector<TranscriptRecord> misses;
};

namespace {


std::string chat_body(const RemoteConfig& cfg, const Decoding& dec, const std::string& prompt) {
  Json body = Json::object();
  body["model"] = cfg.model;
  body["messages"] = Json::array({Json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = dec.temperature;
  body["top_p"] = dec.top_p;
  return body.dump();
}

std::string chat_content(const std::string& body) {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const std::exception&) {
    fail(ErrorKind::kOracleParse, "oracle: response is not JSON");
  }
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception&) {
    fail(ErrorKind::kOracleParse, "oracle: response lacks choices[0].message.content");
  }
}

bool transient(const HttpResult& r) {
  return r.status == 0 || r.status == 429 || r.status >= 500;
}

}  // namespace

OracleHandle OracleHandle::scripted(std::vector<TranscriptRecord> records, Transport transport) {
  OracleHandle h;
  h.state_ = std::make_shared<State>();
  h.state_->backend = Backend::kScripted;
  // Kept only so tests can assert it is never invoked.
  h.state_->transport = std::move(transport);
  for (const auto& rec : records) {
    OracleRequest req{rec.template_id, rec.vars};
    std::string key = req.hash();
    auto [it, inserted] = h.state_->responses.emplace(key, rec.response);
    if (!inserted && it->second != rec.response) {
      fail(ErrorKind::kParse, "transcript: conflicting responses for " +
                                  std::string(to_string(rec.template_id)) + " " + key);
    }
  }
  h.state_->digest = sha256_hex(serialize_transcript(records));
  return h;
}

OracleHandle OracleHandle::scripted_file(const std::filesystem::path& path, Transport transport) {
  std::string text = read_file(path);
  OracleHandle h = scripted(parse_transcript(text, path.string()), std::move(transport));
  h.state_->digest = sha256_hex(text);
  return h;
}

OracleHandle OracleHandle::remote(RemoteConfig config, Transport transport, Decoding decoding) {
  require(!config.endpoint.empty(), "remote oracle: endpoint not configured (REGEN_ORACLE_URL)");
  require(config.max_attempts >= 1, "remote oracle: max_attempts must be positive");
  OracleHandle h;
  h.state_ = std::make_shared<State>();
  h.state_->backend = Backend::kRemote;
  h.state_->decoding = decoding;
  h.state_->digest = sha256_hex(config.endpoint + "\n" + config.model);
  h.state_->remote = std::move(config);
  h.state_->transport = transport ? std::move(transport) : default_transport();
  return h;
}

OracleHandle OracleHandle::from_spec(const std::string& spec) {
  if (starts_with(spec, "scripted:")) return scripted_file(spec.substr(9));
  if (spec == "remote") return remote(remote_config_from_env());
  fail(ErrorKind::kPrecondition, "oracle spec '" + spec + "': expected scripted:<path> or remote");
}

OracleHandle::Backend OracleHandle::backend() const { return state_->backend; }
const Decoding& OracleHandle::decoding() const { return state_->decoding; }
const std::string& OracleHandle::digest() const { return state_->digest; }

std::vector<TranscriptRecord> OracleHandle::misses() const {
  std::lock_guard<std::mutex> lock(state_->mu);
  return state_->misses;
}

OracleResponse OracleHandle::query(const OracleRequest& request) const {
  require(state_ != nullptr, "oracle handle not configured");
  std::string prompt = request.prompt();
  const State& s = *state_;
  if (s.backend == Backend::kScripted) {
    std::string key = hex64(fnv1a64(prompt));
    auto it = s.responses.find(key);
    if (it == s.responses.end()) {
      {
        std::lock_guard<std::mutex> lock(s.mu);
        s.misses.push_back({request.template_id, request.vars, ""});
      }
      fail(ErrorKind::kTranscriptMiss,
           "transcript miss: template " + std::string(to_string(request.template_id)) +
               ", hash " + key);
    }
    return {it->second};
  }

  HttpRequest http;
  http.url = s.remote.endpoint;
  http.headers.emplace_back("Content-Type", "application/json");
  if (!s.remote.api_key.empty()) {
    http.headers.emplace_back("Authorization", "Bearer " + s.remote.api_key);
  }
  http.body = chat_body(s.remote, s.decoding, prompt);

  HttpResult last;
  auto delay = s.remote.backoff;
  for (int attempt = 1; attempt <= s.remote.max_attempts; ++attempt) {
    last = s.transport(http);
    if (last.status >= 200 && last.status < 300) return {chat_content(last.body)};
    if (!transient(last)) break;
    if (attempt < s.remote.max_attempts) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  std::string why = last.status == 0 ? last.error : "HTTP " + std::to_string(last.status);
  fail(ErrorKind::kOracleTransport, "oracle transport: " + why);
}

RemoteConfig remote_config_from_env() {
  RemoteConfig cfg;
  if (const char* v = std::getenv("REGEN_ORACLE_URL")) cfg.endpoint = v;
  if (const char* v = std::getenv("REGEN_ORACLE_MODEL")) cfg.model = v;
  if (const char* v = std::getenv("REGEN_ORACLE_KEY")) cfg.api_key = v;
  return cfg;
}

// ---- answer parsing -------------------------------------------------------

std::string answer_block(std::string_view text) {
  static constexpr std::string_view kOpen = "<Answer>";
  static constexpr std::string_view kClose = "</Answer>";
  std::size_t open = text.rfind(kOpen);
  if (open == std::string_view::npos) {
    fail(ErrorKind::kOracleParse, "oracle answer: no <Answer> block");
  }
  std::size_t begin = open + kOpen.size();
  std::size_t close = text.find(kClose, begin);
  if (close == std::string_view::npos) {
    fail(ErrorKind::kOracleParse, "oracle answer: unterminated <Answer> block");
  }
  return std::string(text.substr(begin, close - begin));
}

namespace {

std::string strip_bold(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '*' && i + 1 < text.size() && text[i + 1] == '*') {
      ++i;
      continue;
    }
    out += text[i];
  }
  return out;
}

std::string strip_trailing_punct(std::string text) {
  while (!text.empty() && (text.back() == '.' || text.back() == ',' || text.back() == ';')) {
    text.pop_back();
  }
  return trim(text);
}

// Non-empty, bold-stripped, whitespace-normalized lines of the answer block.
std::vector<std::string> answer_lines(std::string_view response) {
  std::vector<std::string> lines;
  for (const auto& raw : split(answer_block(response), '\n')) {
    std::string line = normalize_space(strip_bold(raw));
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] void malformed(const std::string& line) {
  fail(ErrorKind::kOracleParse, "oracle answer: malformed line: " + line);
}

// Body of a "- ..." bullet.
std::string bullet(const std::string& line) {
  if (line.size() < 2 || line[0] != '-' || line[1] != ' ') malformed(line);
  return trim(std::string_view(line).substr(2));
}

class Cursor {
 public:
  Cursor(std::string_view text, const std::string& line) : text_(text), line_(line) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) malformed(line_);
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  std::string quoted() {
    skip_ws();
    if (pos_ >= text_.size() || (text_[pos_] != '\'' && text_[pos_] != '"')) malformed(line_);
    char q = text_[pos_++];
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != q) {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out += text_[pos_++];
    }
    if (pos_ >= text_.size()) malformed(line_);
    ++pos_;
    return normalize_space(out);
  }

 private:
  std::string_view text_;
  const std::string& line_;
  std::size_t pos_ = 0;
};

std::vector<std::string> parse_list(std::string_view text, const std::string& line) {
  Cursor cur(text, line);
  cur.expect('[');
  std::vector<std::string> items;
  if (!cur.eat(']')) {
    do {
      items.push_back(cur.quoted());
    } while (cur.eat(','));
    cur.expect(']');
  }
  cur.eat('.');
  if (!cur.at_end()) malformed(line);
  return items;
}

std::vector<std::pair<std::string, std::string>> parse_stage(std::string_view text,
                                                             const std::string& line) {
  Cursor cur(text, line);
  cur.expect('[');
  std::vector<std::pair<std::string, std::string>> pairs;
  if (!cur.eat(']')) {
    do {
      cur.expect('(');
      std::string agent = cur.quoted();
      cur.expect(',');
      std::string state = cur.quoted();
      cur.expect(')');
      pairs.emplace_back(std::move(agent), std::move(state));
    } while (cur.eat(','));
    cur.expect(']');
  }
  if (!cur.at_end()) malformed(line);
  return pairs;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

std::string quoted_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += quote(items[i]);
  }
  return out + "]";
}

}  // namespace

NameDescList parse_name_desc_list(std::string_view response) {
  NameDescList out;
  for (const auto& line : answer_lines(response)) {
    std::string body = bullet(line);
    std::size_t colon = body.find(':');
    if (colon == std::string::npos) malformed(line);
    std::string name = strip_trailing_punct(body.substr(0, colon));
    if (name.empty()) malformed(line);
    out.push_back({name, trim(std::string_view(body).substr(colon + 1))});
  }
  return out;
}

ValueLists parse_value_lists(std::string_view response) {
  ValueLists out;
  for (const auto& line : answer_lines(response)) {
    std::string body = bullet(line);
    std::size_t bracket = body.find('[');
    if (bracket == std::string::npos) malformed(line);
    std::string head = trim(std::string_view(body).substr(0, bracket));
    if (head.empty() || head.back() != ':') malformed(line);
    head.pop_back();
    std::string key = strip_trailing_punct(head);
    if (key.empty()) malformed(line);
    out.emplace_back(key, parse_list(std::string_view(body).substr(bracket), line));
  }
  return out;
}

GroundingAnswer parse_grounding(std::string_view response) {
  GroundingAnswer out;
  enum { kNone, kStates, kFsm } section = kNone;
  for (const auto& line : answer_lines(response)) {
    std::string lower = to_lower(line);
    if (lower == "states:") {
      section = kStates;
      continue;
    }
    if (lower == "fsm:") {
      section = kFsm;
      continue;
    }
    std::string body = bullet(line);
    if (section == kStates) {
      auto parts = split(body, '|');
      if (parts.size() != 3) malformed(line);
      GroundingState st{trim(parts[0]), trim(parts[1]), trim(parts[2])};
      if (st.agent.empty() || st.name.empty() || st.expression.empty()) malformed(line);
      out.states.push_back(std::move(st));
    } else if (section == kFsm) {
      out.stages.push_back(parse_stage(body, line));
    } else {
      malformed(line);
    }
  }
  return out;
}

ParsedAnswer parse_answer(std::string_view response, AnswerSchema schema) {
  switch (schema) {
    case AnswerSchema::kNameDescList: return parse_name_desc_list(response);
    case AnswerSchema::kPerEntityValueLists: return parse_value_lists(response);
    case AnswerSchema::kGrounding: return parse_grounding(response);
  }
  fail(ErrorKind::kPrecondition, "unknown answer schema");
}

std::vector<std::string> values_for(const ValueLists& lists, std::string_view key) {
  for (const auto& [k, v] : lists) {
    if (k == key) return v;
  }
  return {};
}

std::string format_answer(const NameDescList& payload) {
  std::string out = "<Answer>\n";
  for (const auto& nd : payload) out += "- " + nd.name + ": " + nd.description + "\n";
  return out + "</Answer>";
}

std::string format_answer(const ValueLists& payload) {
  std::string out = "<Answer>\n";
  for (const auto& [k, v] : payload) out += "- " + k + ": " + quoted_list(v) + "\n";
  return out + "</Answer>";
}

std::string format_answer(const GroundingAnswer& payload) {
  std::string out = "<Answer>\nstates:\n";
  for (const auto& s : payload.states) {
    out += "- " + s.agent + " | " + s.name + " | " + s.expression + "\n";
  }
  out += "fsm:\n";
  for (const auto& stage : payload.stages) {
    out += "- [";
    for (std::size_t i = 0; i < stage.size(); ++i) {
      if (i > 0) out += ", ";
      out += "(" + quote(stage[i].first) + ", " + quote(stage[i].second) + ")";
    }
    out += "]\n";
  }
  return out + "</Answer>";
}

}  // namespace regen
