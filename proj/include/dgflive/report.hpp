#pragma once

#include <string>

#include "dgflive/campaign.hpp"

namespace dgflive {

std::string bytes_to_hex(std::span<const uint8_t> bytes);
std::vector<uint8_t> hex_to_bytes(const std::string& hex);  // throws ParseError

uint64_t fnv1a64(std::span<const uint8_t> bytes);
uint64_t fnv1a64(const std::string& text);

// Full report document. Everything under the keys named in "volatile" is
// wall-time dependent; reproducibility comparisons must drop those subtrees.
std::string report_to_json(const CampaignReport& report,
                           const std::string& resolved_config_json);

// One CSV row per (mode, run, cve); a case column is prepended when
// case_name is non-empty. Untriggered CVEs leave the tte fields empty.
std::string report_csv_header(bool with_case);
void append_report_csv(std::string& csv, const std::string& case_name,
                       const std::string& mode, uint64_t run,
                       const CampaignReport& report);

// Writes corpus/<id>.bin plus corpus/<id>.meta.json under dir.
void write_corpus(const std::string& dir, const CampaignReport& report);

}  // namespace dgflive
