#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace regen {

enum class TemplateId {
  kEventProposal,
  kEventProposalPrior,
  kPropertyProposal,
  kEdgeSelection,
  kEventEdgeSelection,
  kEntityEdgeSelection,
  kGrounding,
};

std::string_view to_string(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view text);
// The raw template text with {placeholders}.
std::string_view template_text(TemplateId id);

using VarMap = std::map<std::string, std::string>;

// Substitutes every {name} placeholder. Throws kPrecondition naming the first
// unbound variable.
std::string render_prompt(TemplateId id, const VarMap& vars);

struct OracleRequest {
  TemplateId template_id = TemplateId::kEventProposal;
  VarMap vars;

  std::string prompt() const { return render_prompt(template_id, vars); }
  // Canonical lookup key: FNV-1a of the rendered prompt bytes.
  std::string hash() const;
};

struct OracleResponse {
  std::string text;
};

struct Decoding {
  double temperature = 0.0;
  double top_p = 0.0;
};

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResult {
  int status = 0;  // 0 means the connection failed
  std::string body;
  std::string error;
};

using Transport = std::function<HttpResult(const HttpRequest&)>;

// HTTPS/HTTP transport backed by cpp-httplib.
Transport default_transport();

struct RemoteConfig {
  std::string endpoint;
  std::string model;
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds backoff{250};
};

// Reads REGEN_ORACLE_URL / REGEN_ORACLE_MODEL / REGEN_ORACLE_KEY.
RemoteConfig remote_config_from_env();

struct TranscriptRecord {
  TemplateId template_id = TemplateId::kEventProposal;
  VarMap vars;
  std::string response;
};

std::vector<TranscriptRecord> parse_transcript(std::string_view text, const std::string& origin);
std::string serialize_transcript(const std::vector<TranscriptRecord>& records);

// Shared, thread-safe handle to a language-model oracle. Copies share state.
class OracleHandle {
 public:
  enum class Backend { kRemote, kScripted };

  static OracleHandle scripted(std::vector<TranscriptRecord> records,
                               Transport transport = nullptr);
  static OracleHandle scripted_file(const std::filesystem::path& path,
                                    Transport transport = nullptr);
  static OracleHandle remote(RemoteConfig config, Transport transport = nullptr,
                             Decoding decoding = {});
  // "scripted:<path>" or "remote".
  static OracleHandle from_spec(const std::string& spec);

  Backend backend() const;
  const Decoding& decoding() const;
  // SHA-256 of the transcript bytes (scripted) or of the endpoint+model.
  const std::string& digest() const;

  OracleResponse query(const OracleRequest& request) const;

  // Requests that missed the transcript, recorded in arrival order with an
  // empty response; useful for authoring new transcripts.
  std::vector<TranscriptRecord> misses() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

inline OracleResponse query(const OracleHandle& handle, const OracleRequest& request) {
  return handle.query(request);
}

// ---- answer parsing -------------------------------------------------------

enum class AnswerSchema { kNameDescList, kPerEntityValueLists, kGrounding };

struct NameDesc {
  std::string name;
  std::string description;
  friend bool operator==(const NameDesc&, const NameDesc&) = default;
};
using NameDescList = std::vector<NameDesc>;
using ValueLists = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct GroundingState {
  std::string agent;
  std::string name;
  std::string expression;
  friend bool operator==(const GroundingState&, const GroundingState&) = default;
};

struct GroundingAnswer {
  std::vector<GroundingState> states;
  std::vector<std::vector<std::pair<std::string, std::string>>> stages;
  friend bool operator==(const GroundingAnswer&, const GroundingAnswer&) = default;
};

using ParsedAnswer = std::variant<NameDescList, ValueLists, GroundingAnswer>;

// Contents of the last <Answer>...</Answer> block; throws kOracleParse when
// there is none.
std::string answer_block(std::string_view response_text);

ParsedAnswer parse_answer(std::string_view response_text, AnswerSchema schema);
NameDescList parse_name_desc_list(std::string_view response_text);
ValueLists parse_value_lists(std::string_view response_text);
GroundingAnswer parse_grounding(std::string_view response_text);

// Lookup in a ValueLists payload; empty when the key is absent.
std::vector<std::string> values_for(const ValueLists& lists, std::string_view key);

// Inverse renderings in the documented list formats, wrapped in an answer
// block. Reparsing the output yields the input payload.
std::string format_answer(const NameDescList& payload);
std::string format_answer(const ValueLists& payload);
std::string format_answer(const GroundingAnswer& payload);

}  // namespace regen
