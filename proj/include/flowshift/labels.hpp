#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace flowshift {

enum class CoarseClass : std::uint8_t { icmp, otprot, syn, candidate };

inline constexpr std::array kCoarseClasses{CoarseClass::icmp, CoarseClass::otprot, CoarseClass::syn,
                                           CoarseClass::candidate};

std::string_view to_string(CoarseClass c);
std::optional<CoarseClass> parse_coarse(std::string_view text);

enum class AppLabel : std::uint8_t {
  ssh, telnet, ftp, web, unidata, https, rsync, vpn, perfsonar, email, dns, ntp,
  steam, bluejeans, zoom, skype, gmeet, go_to, webex,
  highhigh, twoservice, noservice,
};

inline constexpr std::size_t kAppLabelCount = 22;

inline constexpr std::array<AppLabel, kAppLabelCount> kAppLabels{
    AppLabel::ssh,   AppLabel::telnet,    AppLabel::ftp,       AppLabel::web,      AppLabel::unidata,
    AppLabel::https, AppLabel::rsync,     AppLabel::vpn,       AppLabel::perfsonar, AppLabel::email,
    AppLabel::dns,   AppLabel::ntp,       AppLabel::steam,     AppLabel::bluejeans, AppLabel::zoom,
    AppLabel::skype, AppLabel::gmeet,     AppLabel::go_to,     AppLabel::webex,    AppLabel::highhigh,
    AppLabel::twoservice, AppLabel::noservice};

// Online meeting and gaming applications; only the graphlet classifier assigns these.
inline constexpr std::array kMgLabels{AppLabel::steam, AppLabel::bluejeans, AppLabel::zoom, AppLabel::skype,
                                      AppLabel::gmeet, AppLabel::go_to,     AppLabel::webex};

constexpr bool is_mg(AppLabel l) {
  for (auto m : kMgLabels) {
    if (m == l) return true;
  }
  return false;
}

constexpr std::size_t index_of(AppLabel l) { return static_cast<std::size_t>(l); }

std::string_view to_string(AppLabel l);
std::optional<AppLabel> parse_label(std::string_view text);

}  // namespace flowshift
