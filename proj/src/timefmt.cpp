#include "streamclust/timefmt.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace streamclust {

namespace {

using namespace std::chrono;

// Reads min_width..max_width digits.
bool read_int(std::string_view& s, int min_width, int max_width, int& out) {
  int n = 0;
  while (n < max_width && n < static_cast<int>(s.size()) && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
  if (n < min_width) return false;
  std::from_chars(s.data(), s.data() + n, out);
  s.remove_prefix(static_cast<std::size_t>(n));
  return true;
}

bool eat(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

void skip_spaces(std::string_view& s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
}

std::optional<Timestamp> compose(int y, int mo, int d, int h, int mi, int sec, int ms, int offset_min) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  const auto t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms} - minutes{offset_min};
  return duration_cast<milliseconds>(t.time_since_epoch()).count();
}

// "+HH:MM", "+HHMM", "-HH"; returns minutes east of UTC.
bool read_numeric_zone(std::string_view& s, int& offset) {
  if (s.empty() || (s.front() != '+' && s.front() != '-')) return false;
  const int sign = s.front() == '-' ? -1 : 1;
  s.remove_prefix(1);
  int hh = 0, mm = 0;
  if (!read_int(s, 2, 2, hh)) return false;
  eat(s, ':');
  if (!s.empty() && std::isdigit(static_cast<unsigned char>(s.front())) && !read_int(s, 2, 2, mm)) return false;
  offset = sign * (hh * 60 + mm);
  return true;
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  skip_spaces(s);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, ms = 0, offset = 0;
  if (!read_int(s, 4, 4, y) || !eat(s, '-') || !read_int(s, 2, 2, mo) || !eat(s, '-') || !read_int(s, 2, 2, d))
    return std::nullopt;
  if (!s.empty() && (s.front() == 'T' || s.front() == 't' || s.front() == ' ')) {
    s.remove_prefix(1);
    if (!read_int(s, 2, 2, h) || !eat(s, ':') || !read_int(s, 2, 2, mi)) return std::nullopt;
    if (eat(s, ':')) {
      if (!read_int(s, 2, 2, sec)) return std::nullopt;
      if (eat(s, '.') || eat(s, ',')) {
        std::size_t n = 0;
        while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
        if (n == 0) return std::nullopt;
        // Milliseconds from the first three fraction digits.
        int scale = 100;
        for (std::size_t i = 0; i < n && i < 3; ++i, scale /= 10) ms += (s[i] - '0') * scale;
        s.remove_prefix(n);
      }
    }
    if (eat(s, 'Z') || eat(s, 'z')) {
    } else if (!s.empty() && !read_numeric_zone(s, offset)) {
      return std::nullopt;
    }
  }
  skip_spaces(s);
  if (!s.empty()) return std::nullopt;
  return compose(y, mo, d, h, mi, sec, ms, offset);
}

std::optional<Timestamp> parse_mail_date(std::string_view s) {
  static constexpr std::array<std::string_view, 12> kMonths = {"jan", "feb", "mar", "apr", "may", "jun",
                                                               "jul", "aug", "sep", "oct", "nov", "dec"};
  struct Zone {
    std::string_view name;
    int offset;
  };
  static constexpr std::array<Zone, 11> kZones = {{{"gmt", 0},
                                                   {"ut", 0},
                                                   {"utc", 0},
                                                   {"est", -300},
                                                   {"edt", -240},
                                                   {"cst", -360},
                                                   {"cdt", -300},
                                                   {"mst", -420},
                                                   {"mdt", -360},
                                                   {"pst", -480},
                                                   {"pdt", -420}}};
  const auto lower_word = [](std::string_view& in) {
    std::string w;
    while (!in.empty() && std::isalpha(static_cast<unsigned char>(in.front()))) {
      w += static_cast<char>(std::tolower(static_cast<unsigned char>(in.front())));
      in.remove_prefix(1);
    }
    return w;
  };

  skip_spaces(s);
  if (!s.empty() && std::isalpha(static_cast<unsigned char>(s.front()))) {
    lower_word(s);  // weekday
    eat(s, ',');
    skip_spaces(s);
  }
  int d = 0, y = 0, h = 0, mi = 0, sec = 0, offset = 0;
  if (!read_int(s, 1, 2, d)) return std::nullopt;
  skip_spaces(s);
  eat(s, '-');
  const std::string mon = lower_word(s);
  int mo = 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i)
    if (mon.size() >= 3 && std::string_view(mon).substr(0, 3) == kMonths[i]) mo = static_cast<int>(i) + 1;
  if (mo == 0) return std::nullopt;
  skip_spaces(s);
  eat(s, '-');
  const std::size_t before = s.size();
  if (!read_int(s, 2, 4, y)) return std::nullopt;
  if (before - s.size() == 2) y += y < 50 ? 2000 : 1900;
  skip_spaces(s);
  if (!read_int(s, 1, 2, h) || !eat(s, ':') || !read_int(s, 2, 2, mi)) return std::nullopt;
  if (eat(s, ':') && !read_int(s, 2, 2, sec)) return std::nullopt;
  skip_spaces(s);
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    if (!read_numeric_zone(s, offset)) return std::nullopt;
  } else if (!s.empty()) {
    const std::string zone = lower_word(s);
    for (const Zone& z : kZones)
      if (zone == z.name) offset = z.offset;
  }
  return compose(y, mo, d, h, mi, sec, 0, offset);
}

std::string format_iso8601(Timestamp t) {
  const auto tp = sys_time<milliseconds>{milliseconds{t}};
  const auto dp = floor<days>(tp);
  const year_month_day ymd{dp};
  const hh_mm_ss hms{tp - dp};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
  return buf;
}

}  // namespace streamclust
