#include "dgflive/report.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace dgflive {

using nlohmann::json;

std::string bytes_to_hex(std::span<const uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

std::vector<uint8_t> hex_to_bytes(const std::string& hex) {
  if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::vector<uint8_t> out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("invalid hex digit in '" + hex + "'");
    out.push_back(static_cast<uint8_t>(hi << 4 | lo));
  }
  return out;
}

uint64_t fnv1a64(std::span<const uint8_t> bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64(const std::string& text) {
  return fnv1a64(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

namespace {

json risk_json(const RiskTuple& r) {
  return json{{"r_client", r.r_client}, {"r_library", r.r_library},
              {"d_s_ct", r.d_s_ct},     {"d_s_vt", r.d_s_vt},
              {"d_r_ct", r.d_r_ct},     {"d_r_vt", r.d_r_vt},
              {"is", r.is_score}};
}

}  // namespace

std::string report_to_json(const CampaignReport& report,
                           const std::string& resolved_config_json) {
  json triggered = json::object();
  json tte_secs = json::object();
  for (const auto& [cve, rec] : report.triggered) {
    triggered[cve] = {{"input", bytes_to_hex(rec.input)},
                      {"tte_execs", rec.tte_execs}};
    tte_secs[cve] = rec.tte_secs;
  }
  json queue_points = json::array();
  for (const auto& [e, s] : report.queue_over_time)
    queue_points.push_back(json::array({e, s}));

  json out{
      {"schema", "dgflive-report-v1"},
      {"volatile", json::array({"wall"})},
      {"config", json::parse(resolved_config_json)},
      {"results",
       {{"executions", report.executions},
        {"p_vt", report.p_vt},
        {"cves", report.cves},
        {"triggered", triggered},
        {"queue_size", report.queue.size()},
        {"queue_over_time", queue_points}}},
      {"wall", {{"seconds", report.wall_secs}, {"tte_secs", tte_secs}}}};
  return out.dump(2) + "\n";
}

std::string report_csv_header(bool with_case) {
  std::string h = "mode,run,cve,triggered,tte_execs,tte_secs,p_vt,executions\n";
  return with_case ? "case," + h : h;
}

void append_report_csv(std::string& csv, const std::string& case_name,
                       const std::string& mode, uint64_t run,
                       const CampaignReport& report) {
  auto row = [&](const std::string& cve) {
    if (!case_name.empty()) csv += case_name + ",";
    csv += mode + "," + std::to_string(run) + "," + cve + ",";
    auto it = report.triggered.find(cve);
    if (it != report.triggered.end()) {
      csv += "1," + std::to_string(it->second.tte_execs) + "," +
             std::to_string(it->second.tte_secs);
    } else {
      csv += "0,,";
    }
    csv += "," + std::to_string(report.p_vt) + "," +
           std::to_string(report.executions) + "\n";
  };
  if (report.cves.empty())
    row("");
  else
    for (const std::string& cve : report.cves) row(cve);
}

void write_corpus(const std::string& dir, const CampaignReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const SeedMeta& seed : report.queue) {
    std::string stem = dir + "/" + std::to_string(seed.id);
    {
      std::ofstream bin(stem + ".bin", std::ios::binary);
      bin.write(reinterpret_cast<const char*>(seed.input.data()),
                static_cast<std::streamsize>(seed.input.size()));
    }
    json meta{{"id", seed.id},
              {"parent", seed.parent},
              {"discovered_at_execs", seed.discovered_at_execs},
              {"discovered_at_secs", seed.discovered_at_secs},
              {"digest", seed.digest},
              {"risk", risk_json(seed.risk)},
              {"normalized",
               {{"r_client", seed.norm.r_client}, {"r_library", seed.norm.r_library}}}};
    std::ofstream mf(stem + ".meta.json");
    mf << meta.dump(2) << "\n";
  }
}

}  // namespace dgflive
