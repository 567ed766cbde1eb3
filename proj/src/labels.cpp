#include "flowshift/labels.hpp"

namespace flowshift {
namespace {

constexpr std::array<std::string_view, kAppLabelCount> kNames{
    "ssh",   "telnet", "ftp",   "web",       "unidata", "https", "rsync", "vpn",
    "perfsonar", "email", "dns", "ntp",      "steam",   "bluejeans", "zoom", "skype",
    "gmeet", "goto",   "webex", "highhigh", "twoservice", "noservice"};

}  // namespace

std::string_view to_string(CoarseClass c) {
  switch (c) {
    case CoarseClass::icmp: return "icmp";
    case CoarseClass::otprot: return "otprot";
    case CoarseClass::syn: return "syn";
    case CoarseClass::candidate: break;
  }
  return "candidate";
}

std::optional<CoarseClass> parse_coarse(std::string_view text) {
  for (auto c : kCoarseClasses) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::string_view to_string(AppLabel l) { return kNames[index_of(l)]; }

std::optional<AppLabel> parse_label(std::string_view text) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == text) return kAppLabels[i];
  }
  if (text == "googlemeet" || text == "google_meet") return AppLabel::gmeet;
  if (text == "gotomeeting") return AppLabel::go_to;
  return std::nullopt;
}

}  // namespace flowshift
