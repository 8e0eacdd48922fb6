#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "enose/quality.hpp"

namespace enose {

struct LocaleBundle {
  std::string locale;
  std::map<std::string, std::string> strings;
};

inline auto category_key(Category c) -> std::string {
  switch (c) {
    case Category::excellent: return "category.excellent";
    case Category::good: return "category.good";
    case Category::moderate: return "category.moderate";
    case Category::bad: return "category.bad";
    case Category::rotten: return "category.rotten";
  }
  return {};
}

inline auto english_bundle() -> LocaleBundle {
  return {"en",
          {
              {"category.excellent", "Excellent"},
              {"category.good", "Good"},
              {"category.moderate", "Moderate"},
              {"category.bad", "Bad"},
              {"category.rotten", "Rotten"},
              {"field.methane", "Methane"},
              {"field.ethanol", "Ethanol"},
              {"field.ammonia", "Ammonia"},
              {"field.temperature", "Temperature"},
              {"field.humidity", "Humidity"},
              {"field.weight", "Stored weight"},
              {"field.active_sensors", "Active sensors"},
              {"field.quality", "Quality"},
              {"field.quality_index", "Quality index"},
              {"field.ppm_per_kg", "ppm/kg"},
              {"field.voltage", "Voltage"},
              {"field.trends", "Gas concentration trends"},
              {"field.signal_report", "Signal quality"},
              {"field.snr", "SNR"},
              {"field.residual_noise", "Residual noise"},
              {"field.rolling_std", "Mean rolling std"},
              {"field.autocorrelation", "Autocorrelation"},
              {"field.last_refresh", "Last updated"},
              {"action.refresh", "Refresh data"},
              {"action.language", "বাংলা"},
              {"state.empty", "No readings yet"},
              {"state.stable", "Stable"},
              {"state.not_computable", "Not computable"},
              {"state.fault", "Sensor fault"},
              {"error.fetch_failed", "Could not reach the server; showing the last data received"},
          }};
}

inline auto bengali_bundle() -> LocaleBundle {
  return {"bn",
          {
              {"category.excellent", "চমৎকার"},
              {"category.good", "ভালো"},
              {"category.moderate", "মাঝারি"},
              {"category.bad", "খারাপ"},
              {"category.rotten", "পচা"},
              {"field.methane", "মিথেন"},
              {"field.ethanol", "ইথানল"},
              {"field.ammonia", "অ্যামোনিয়া"},
              {"field.temperature", "তাপমাত্রা"},
              {"field.humidity", "আর্দ্রতা"},
              {"field.weight", "সংরক্ষিত ওজন"},
              {"field.active_sensors", "সক্রিয় সেন্সর"},
              {"field.quality", "গুণমান"},
              {"field.quality_index", "গুণমান সূচক"},
              {"field.ppm_per_kg", "পিপিএম/কেজি"},
              {"field.voltage", "ভোল্টেজ"},
              {"field.trends", "গ্যাসের ঘনত্বের প্রবণতা"},
              {"field.signal_report", "সংকেতের গুণমান"},
              {"field.snr", "সংকেত-শব্দ অনুপাত"},
              {"field.residual_noise", "অবশিষ্ট শব্দ"},
              {"field.rolling_std", "গড় চলমান বিচ্যুতি"},
              {"field.autocorrelation", "স্বসম্পর্ক"},
              {"field.last_refresh", "সর্বশেষ হালনাগাদ"},
              {"action.refresh", "তথ্য রিফ্রেশ করুন"},
              {"action.language", "English"},
              {"state.empty", "এখনও কোনো তথ্য নেই"},
              {"state.stable", "স্থিতিশীল"},
              {"state.not_computable", "গণনা করা যায়নি"},
              {"state.fault", "সেন্সর ত্রুটি"},
              {"error.fetch_failed", "সার্ভারের সাথে সংযোগ হয়নি; সর্বশেষ প্রাপ্ত তথ্য দেখানো হচ্ছে"},
          }};
}

inline auto locale_bundle(std::string_view locale) -> std::optional<LocaleBundle> {
  if (locale == "en") return english_bundle();
  if (locale == "bn") return bengali_bundle();
  return std::nullopt;
}

}  // namespace enose
