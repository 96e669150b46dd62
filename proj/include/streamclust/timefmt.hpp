#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "streamclust/text.hpp"

namespace streamclust {

// "YYYY-MM-DD", optionally followed by 'T' or ' ' and "HH:MM[:SS[.fff]]" and
// a zone ("Z", "+HH:MM", "+HHMM"). No zone means UTC.
std::optional<Timestamp> parse_iso8601(std::string_view s);

// Mail-style dates as found in Usenet headers:
// "[Wkd,] D Mon YY[YY] HH:MM[:SS] [zone]". Two-digit years below 50 are
// 20xx. Unknown zone names count as UTC.
std::optional<Timestamp> parse_mail_date(std::string_view s);

// "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_iso8601(Timestamp t);

}  // namespace streamclust
