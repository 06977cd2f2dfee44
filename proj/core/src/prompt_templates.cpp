#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "studentsim/agent_engine.hpp"
#include "studentsim/hashing.hpp"

namespace studentsim {

namespace detail {
const char* builtin_template_version();
std::map<std::string, std::string> builtin_template_parts();
}  // namespace detail

namespace {

constexpr std::array<const char*, 9> kRequiredParts{"system",   "persona", "slide",           "demonstration",
                                                    "priors",   "reflect", "schema_cognitive", "schema_standard",
                                                    "correction"};

}  // namespace

PromptTemplates::PromptTemplates(std::string version, std::map<std::string, std::string> parts)
    : version_(std::move(version)), parts_(std::move(parts)) {
  for (const char* name : kRequiredParts) {
    if (!parts_.count(name)) throw std::invalid_argument(std::string("prompt templates lack '") + name + "'");
  }
}

PromptTemplates PromptTemplates::builtin() {
  return PromptTemplates(detail::builtin_template_version(), detail::builtin_template_parts());
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  std::map<std::string, std::string> parts;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    parts.emplace(entry.path().stem().string(), body.str());
  }
  auto version = std::filesystem::path(dir).lexically_normal().filename().string();
  if (version.empty()) version = std::filesystem::path(dir).lexically_normal().parent_path().filename().string();
  return PromptTemplates(version, std::move(parts));
}

const std::string& PromptTemplates::get(const std::string& name) const {
  auto it = parts_.find(name);
  if (it == parts_.end()) throw std::invalid_argument("no prompt template named '" + name + "'");
  return it->second;
}

std::string PromptTemplates::hash() const {
  std::uint64_t h = fnv1a64(version_);
  for (const auto& [name, body] : parts_) {
    h = fnv1a64(name, h);
    h = fnv1a64(std::string_view("\0", 1), h);
    h = fnv1a64(body, h);
  }
  return hex64(h);
}

std::string render_template(const std::string& tpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (true) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string::npos) break;
    out.append(tpl, pos, open - pos);
    const auto name = tpl.substr(open + 2, close - open - 2);
    auto it = vars.find(name);
    if (it == vars.end()) throw std::invalid_argument("template uses unknown placeholder {{" + name + "}}");
    out += it->second;
    pos = close + 2;
  }
  out.append(tpl, pos);
  return out;
}

std::vector<std::string> prior_statements(const PromptTemplates& templates) {
  std::vector<std::string> out;
  std::istringstream in(templates.get("priors"));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0])) && line.find(". ") != std::string::npos) {
      out.push_back(line);
    }
  }
  return out;
}

}  // namespace studentsim
