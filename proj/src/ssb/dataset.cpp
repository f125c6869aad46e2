#include "colcrunch/ssb/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "colcrunch/error.hpp"
#include "colcrunch/ssb/rng.hpp"

namespace colcrunch::ssb {

namespace {

using storage::ColumnData;
using U32s = std::vector<std::uint32_t>;
using Strings = std::vector<std::string>;

struct Nation {
  const char* name;
  int region;
};

constexpr std::array<const char*, 5> kRegions = {"AFRICA", "AMERICA", "ASIA", "EUROPE",
                                                 "MIDDLE EAST"};
constexpr std::array<Nation, 25> kNations = {{
    {"ALGERIA", 0},      {"ARGENTINA", 1}, {"BRAZIL", 1},  {"CANADA", 1},
    {"EGYPT", 4},        {"ETHIOPIA", 0},  {"FRANCE", 3},  {"GERMANY", 3},
    {"INDIA", 2},        {"INDONESIA", 2}, {"IRAN", 4},    {"IRAQ", 4},
    {"JAPAN", 2},        {"JORDAN", 4},    {"KENYA", 0},   {"MOROCCO", 0},
    {"MOZAMBIQUE", 0},   {"PERU", 1},      {"CHINA", 2},   {"ROMANIA", 3},
    {"SAUDI ARABIA", 4}, {"VIETNAM", 2},   {"RUSSIA", 3},  {"UNITED KINGDOM", 3},
    {"UNITED STATES", 1},
}};

constexpr std::array<const char*, 5> kSegments = {"AUTOMOBILE", "BUILDING", "FURNITURE",
                                                  "MACHINERY", "HOUSEHOLD"};
constexpr std::array<const char*, 5> kPriorities = {"1-URGENT", "2-HIGH", "3-MEDIUM",
                                                    "4-NOT SPECI", "5-LOW"};
constexpr std::array<const char*, 7> kShipModes = {"REG AIR", "AIR",  "RAIL", "SHIP",
                                                   "TRUCK",   "MAIL", "FOB"};
constexpr std::array<const char*, 24> kColors = {
    "almond", "antique", "aquamarine", "azure",  "beige",    "bisque", "black",  "blanched",
    "blue",   "blush",   "brown",      "burlywood", "chartreuse", "coral", "cornsilk", "cyan",
    "forest", "ghost",   "honeydew",   "ivory",  "khaki",    "lavender", "linen", "maroon"};
constexpr std::array<const char*, 6> kTypeSize = {"STANDARD", "SMALL", "MEDIUM",
                                                  "LARGE",    "ECONOMY", "PROMO"};
constexpr std::array<const char*, 5> kTypeFinish = {"ANODIZED", "BURNISHED", "PLATED",
                                                    "POLISHED", "BRUSHED"};
constexpr std::array<const char*, 5> kTypeMetal = {"TIN", "NICKEL", "BRASS", "STEEL", "COPPER"};
constexpr std::array<const char*, 5> kContainerSize = {"SM", "LG", "MED", "JUMBO", "WRAP"};
constexpr std::array<const char*, 8> kContainerKind = {"CASE", "BOX", "BAG",  "JAR",
                                                       "PKG",  "PACK", "CAN", "DRUM"};
constexpr std::array<const char*, 12> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};
constexpr std::array<const char*, 7> kDayNames = {"Sunday",   "Monday", "Tuesday", "Wednesday",
                                                  "Thursday", "Friday", "Saturday"};

std::string formatted(const char* fmt, auto... args) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, fmt, args...);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string random_text(Rng& rng, std::uint32_t min_len, std::uint32_t max_len) {
  static constexpr std::string_view kAlphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ,.";
  std::string s(rng.between(min_len, max_len), ' ');
  for (auto& ch : s) ch = kAlphabet[rng.below(kAlphabet.size())];
  return s;
}

std::string city_of(int nation, std::uint32_t digit) {
  std::string prefix = kNations[nation].name;
  prefix.resize(9, ' ');
  return prefix + static_cast<char>('0' + digit);
}

std::string phone_of(Rng& rng, int nation) {
  return formatted("%02d-%03u-%03u-%04u", nation + 10, rng.between(100, 999),
                   rng.between(100, 999), rng.between(1000, 9999));
}

std::uint64_t scaled(double base, double sf) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(base * sf)));
}

using namespace std::chrono;

std::uint32_t date_key(year_month_day d) {
  return static_cast<std::uint32_t>(static_cast<int>(d.year()) * 10000 +
                                    static_cast<unsigned>(d.month()) * 100 +
                                    static_cast<unsigned>(d.day()));
}

const sys_days kFirstDay = sys_days{year{1992} / January / 1};

TableData make_date() {
  U32s datekey, yr, yearmonthnum, daynuminweek, daynuminmonth, daynuminyear, monthnuminyear,
      weeknuminyear, lastdayinweek, lastdayinmonth, holiday, weekdayfl;
  Strings date, dayofweek, month, yearmonth, season;
  for (std::uint64_t i = 0; i < kDateRows; ++i) {
    const sys_days d = kFirstDay + days{i};
    const year_month_day ymd{d};
    const weekday wd{d};
    const int y = static_cast<int>(ymd.year());
    const unsigned m = static_cast<unsigned>(ymd.month());
    const unsigned dd = static_cast<unsigned>(ymd.day());
    const auto doy = static_cast<std::uint32_t>((d - sys_days{ymd.year() / January / 1}).count() + 1);

    datekey.push_back(date_key(ymd));
    date.push_back(formatted("%s %u, %d", kMonthNames[m - 1], dd, y));
    dayofweek.push_back(kDayNames[wd.c_encoding()]);
    month.push_back(kMonthNames[m - 1]);
    yr.push_back(static_cast<std::uint32_t>(y));
    yearmonthnum.push_back(static_cast<std::uint32_t>(y * 100) + m);
    yearmonth.push_back(std::string(kMonthNames[m - 1]).substr(0, 3) + std::to_string(y));
    daynuminweek.push_back(wd.c_encoding() + 1);
    daynuminmonth.push_back(dd);
    daynuminyear.push_back(doy);
    monthnuminyear.push_back(m);
    weeknuminyear.push_back((doy - 1) / 7 + 1);
    season.push_back(m == 12 ? "Christmas"
                     : m <= 2 ? "Winter"
                     : m <= 5 ? "Spring"
                     : m <= 8 ? "Summer"
                              : "Fall");
    lastdayinweek.push_back(wd == Saturday ? 1 : 0);
    lastdayinmonth.push_back(ymd.day() == (ymd.year() / ymd.month() / last).day() ? 1 : 0);
    const bool hol = (m == 1 && dd == 1) || (m == 7 && dd == 4) || (m == 11 && dd == 11) ||
                     (m == 12 && dd == 25) || (m == 5 && dd == 1);
    holiday.push_back(hol ? 1 : 0);
    weekdayfl.push_back(wd != Saturday && wd != Sunday ? 1 : 0);
  }
  TableData t{std::string(kDate), {}};
  auto add = [&](const char* name, ColumnData c) { t.columns.emplace_back(name, std::move(c)); };
  add("d_datekey", std::move(datekey));
  add("d_date", std::move(date));
  add("d_dayofweek", std::move(dayofweek));
  add("d_month", std::move(month));
  add("d_year", std::move(yr));
  add("d_yearmonthnum", std::move(yearmonthnum));
  add("d_yearmonth", std::move(yearmonth));
  add("d_daynuminweek", std::move(daynuminweek));
  add("d_daynuminmonth", std::move(daynuminmonth));
  add("d_daynuminyear", std::move(daynuminyear));
  add("d_monthnuminyear", std::move(monthnuminyear));
  add("d_weeknuminyear", std::move(weeknuminyear));
  add("d_sellingseason", std::move(season));
  add("d_lastdayinweekfl", std::move(lastdayinweek));
  add("d_lastdayinmonthfl", std::move(lastdayinmonth));
  add("d_holidayfl", std::move(holiday));
  add("d_weekdayfl", std::move(weekdayfl));
  return t;
}

TableData make_customer(std::uint64_t n, Rng& rng) {
  U32s key;
  Strings name, address, city, nation, region, phone, segment;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const int nat = static_cast<int>(rng.below(kNations.size()));
    key.push_back(static_cast<std::uint32_t>(i));
    name.push_back(formatted("Customer#%09llu", static_cast<unsigned long long>(i)));
    address.push_back(random_text(rng, 10, 25));
    city.push_back(city_of(nat, rng.between(0, 9)));
    nation.push_back(kNations[nat].name);
    region.push_back(kRegions[kNations[nat].region]);
    phone.push_back(phone_of(rng, nat));
    segment.push_back(rng.pick(kSegments));
  }
  TableData t{std::string(kCustomer), {}};
  t.columns.emplace_back("c_custkey", std::move(key));
  t.columns.emplace_back("c_name", std::move(name));
  t.columns.emplace_back("c_address", std::move(address));
  t.columns.emplace_back("c_city", std::move(city));
  t.columns.emplace_back("c_nation", std::move(nation));
  t.columns.emplace_back("c_region", std::move(region));
  t.columns.emplace_back("c_phone", std::move(phone));
  t.columns.emplace_back("c_mktsegment", std::move(segment));
  return t;
}

TableData make_supplier(std::uint64_t n, Rng& rng) {
  U32s key;
  Strings name, address, city, nation, region, phone;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const int nat = static_cast<int>(rng.below(kNations.size()));
    key.push_back(static_cast<std::uint32_t>(i));
    name.push_back(formatted("Supplier#%09llu", static_cast<unsigned long long>(i)));
    address.push_back(random_text(rng, 10, 25));
    city.push_back(city_of(nat, rng.between(0, 9)));
    nation.push_back(kNations[nat].name);
    region.push_back(kRegions[kNations[nat].region]);
    phone.push_back(phone_of(rng, nat));
  }
  TableData t{std::string(kSupplier), {}};
  t.columns.emplace_back("s_suppkey", std::move(key));
  t.columns.emplace_back("s_name", std::move(name));
  t.columns.emplace_back("s_address", std::move(address));
  t.columns.emplace_back("s_city", std::move(city));
  t.columns.emplace_back("s_nation", std::move(nation));
  t.columns.emplace_back("s_region", std::move(region));
  t.columns.emplace_back("s_phone", std::move(phone));
  return t;
}

TableData make_part(std::uint64_t n, Rng& rng) {
  U32s key, size;
  Strings name, mfgr, category, brand, color, type, container;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const std::uint32_t m = rng.between(1, 5);
    const std::uint32_t c = rng.between(1, 5);
    const std::uint32_t b = rng.between(1, 40);
    key.push_back(static_cast<std::uint32_t>(i));
    name.push_back(std::string(rng.pick(kColors)) + " " + rng.pick(kColors));
    mfgr.push_back("MFGR#" + std::to_string(m));
    category.push_back("MFGR#" + std::to_string(m) + std::to_string(c));
    brand.push_back("MFGR#" + std::to_string(m) + std::to_string(c) + std::to_string(b));
    color.push_back(rng.pick(kColors));
    type.push_back(std::string(rng.pick(kTypeSize)) + " " + rng.pick(kTypeFinish) + " " +
                   rng.pick(kTypeMetal));
    size.push_back(rng.between(1, 50));
    container.push_back(std::string(rng.pick(kContainerSize)) + " " + rng.pick(kContainerKind));
  }
  TableData t{std::string(kPart), {}};
  t.columns.emplace_back("p_partkey", std::move(key));
  t.columns.emplace_back("p_name", std::move(name));
  t.columns.emplace_back("p_mfgr", std::move(mfgr));
  t.columns.emplace_back("p_category", std::move(category));
  t.columns.emplace_back("p_brand1", std::move(brand));
  t.columns.emplace_back("p_color", std::move(color));
  t.columns.emplace_back("p_type", std::move(type));
  t.columns.emplace_back("p_size", std::move(size));
  t.columns.emplace_back("p_container", std::move(container));
  return t;
}

std::uint32_t retail_price(std::uint32_t partkey) {
  return 90000 + ((partkey / 10) % 20001) + 100 * (partkey % 1000);
}

TableData make_lineorder(const RowCounts& rc, const U32s& datekeys, Rng& rng) {
  const std::size_t n = rc.lineorder;
  U32s orderkey, linenumber, custkey, partkey, suppkey, orderdate, shippriority, quantity,
      extendedprice, ordtotalprice, discount, revenue, supplycost, tax, commitdate;
  Strings orderpriority, shipmode;
  for (auto* v : {&orderkey, &linenumber, &custkey, &partkey, &suppkey, &orderdate, &shippriority,
                  &quantity, &extendedprice, &ordtotalprice, &discount, &revenue, &supplycost,
                  &tax, &commitdate}) {
    v->reserve(n);
  }
  orderpriority.reserve(n);
  shipmode.reserve(n);

  std::uint32_t order = 0;
  while (orderkey.size() < n) {
    ++order;
    const std::size_t lines = std::min<std::size_t>(rng.between(1, 7), n - orderkey.size());
    const std::uint32_t cust = rng.between(1, static_cast<std::uint32_t>(rc.customer));
    const std::size_t day = rng.below(datekeys.size());
    const std::uint32_t date = datekeys[day];
    const char* prio = rng.pick(kPriorities);
    std::uint64_t total = 0;
    for (std::size_t l = 0; l < lines; ++l) {
      const std::uint32_t pk = rng.between(1, static_cast<std::uint32_t>(rc.part));
      const std::uint32_t qty = rng.between(1, 50);
      const std::uint32_t disc = rng.between(0, 10);
      const std::uint32_t tx = rng.between(0, 8);
      const std::uint32_t price = retail_price(pk);
      const std::uint32_t ext = qty * price;
      const std::uint32_t rev = static_cast<std::uint32_t>(std::uint64_t{ext} * (100 - disc) / 100);
      total += std::uint64_t{rev} * (100 + tx) / 100;

      orderkey.push_back(order);
      linenumber.push_back(static_cast<std::uint32_t>(l + 1));
      custkey.push_back(cust);
      partkey.push_back(pk);
      suppkey.push_back(rng.between(1, static_cast<std::uint32_t>(rc.supplier)));
      orderdate.push_back(date);
      orderpriority.emplace_back(prio);
      shippriority.push_back(0);
      quantity.push_back(qty);
      extendedprice.push_back(ext);
      discount.push_back(disc);
      revenue.push_back(rev);
      supplycost.push_back(6 * price / 10);
      tax.push_back(tx);
      commitdate.push_back(date_key(year_month_day{kFirstDay + days{day + rng.between(30, 90)}}));
      shipmode.emplace_back(rng.pick(kShipModes));
    }
    ordtotalprice.insert(ordtotalprice.end(), lines, static_cast<std::uint32_t>(total));
  }

  TableData t{std::string(kLineorder), {}};
  auto add = [&](const char* name, ColumnData c) { t.columns.emplace_back(name, std::move(c)); };
  add("lo_orderkey", std::move(orderkey));
  add("lo_linenumber", std::move(linenumber));
  add("lo_custkey", std::move(custkey));
  add("lo_partkey", std::move(partkey));
  add("lo_suppkey", std::move(suppkey));
  add("lo_orderdate", std::move(orderdate));
  add("lo_orderpriority", std::move(orderpriority));
  add("lo_shippriority", std::move(shippriority));
  add("lo_quantity", std::move(quantity));
  add("lo_extendedprice", std::move(extendedprice));
  add("lo_ordtotalprice", std::move(ordtotalprice));
  add("lo_discount", std::move(discount));
  add("lo_revenue", std::move(revenue));
  add("lo_supplycost", std::move(supplycost));
  add("lo_tax", std::move(tax));
  add("lo_commitdate", std::move(commitdate));
  add("lo_shipmode", std::move(shipmode));
  return t;
}

}  // namespace

RowCounts row_counts(double sf) {
  if (!(sf > 0) || !std::isfinite(sf)) throw ContractError("scale factor must be positive");
  RowCounts rc;
  rc.lineorder = static_cast<std::uint64_t>(std::llround(6'000'000.0 * sf));
  rc.customer = scaled(30'000, sf);
  rc.supplier = scaled(2'000, sf);
  // Standard sizing grows parts logarithmically above sf 1; below it the
  // count is scaled linearly so small datasets stay proportionate.
  rc.part = sf >= 1 ? 200'000 * static_cast<std::uint64_t>(1 + std::floor(std::log2(sf)))
                    : scaled(200'000, sf);
  return rc;
}

std::uint64_t TableData::rows() const {
  if (columns.empty()) return 0;
  return std::visit([](const auto& v) { return static_cast<std::uint64_t>(v.size()); },
                    columns.front().second);
}

const storage::ColumnData& TableData::column(std::string_view col) const {
  for (const auto& [n, d] : columns) {
    if (n == col) return d;
  }
  throw NotFoundError("no column " + name + "." + std::string(col));
}

const std::vector<std::uint32_t>& TableData::u32(std::string_view col) const {
  const auto* v = std::get_if<U32s>(&column(col));
  if (v == nullptr) throw TypeError(name + "." + std::string(col) + " is not a u32 column");
  return *v;
}

const std::vector<std::string>& TableData::strings(std::string_view col) const {
  const auto* v = std::get_if<Strings>(&column(col));
  if (v == nullptr) throw TypeError(name + "." + std::string(col) + " is not a string column");
  return *v;
}

const TableData& SsbDataset::table(std::string_view name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw NotFoundError("no table " + std::string(name));
}

SsbDataset generate(double scale_factor, std::uint64_t seed) {
  const RowCounts rc = row_counts(scale_factor);
  Rng cust_rng(mix_seed(seed, 1)), supp_rng(mix_seed(seed, 2)),
      part_rng(mix_seed(seed, 3)), lo_rng(mix_seed(seed, 4));
  SsbDataset ds;
  ds.tables.push_back(TableData{});  // lineorder goes first once dimensions exist
  ds.tables.push_back(make_date());
  ds.tables.push_back(make_customer(rc.customer, cust_rng));
  ds.tables.push_back(make_supplier(rc.supplier, supp_rng));
  ds.tables.push_back(make_part(rc.part, part_rng));
  ds.tables[0] = make_lineorder(rc, ds.tables[1].u32("d_datekey"), lo_rng);
  return ds;
}

storage::Catalog write_dataset(const SsbDataset& data, const std::filesystem::path& out_dir,
                               std::uint32_t page_size_bytes) {
  std::filesystem::create_directories(out_dir);
  storage::Catalog catalog(out_dir);
  for (const auto& t : data.tables) {
    for (const auto& [name, column] : t.columns) {
      storage::add_column(catalog, t.name, name, column, codecs::CodecId::Raw, page_size_bytes);
    }
  }
  catalog.save(out_dir / storage::kCatalogFileName);
  return catalog;
}

storage::Catalog generate_dataset(double scale_factor, std::uint64_t seed,
                                  const std::filesystem::path& out_dir,
                                  std::uint32_t page_size_bytes, bool force) {
  row_counts(scale_factor);
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(out_dir, ec) && !fs::is_empty(out_dir, ec)) {
    if (!force) {
      throw IoError(out_dir.string() + " is not empty (use --force to overwrite)");
    }
    for (const auto& e : fs::directory_iterator(out_dir)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() &&
          (ext == ".pcf" || ext == ".tmp" || e.path().filename() == storage::kCatalogFileName)) {
        fs::remove(e.path());
      }
    }
  }
  return write_dataset(generate(scale_factor, seed), out_dir, page_size_bytes);
}

std::vector<storage::CompressionReport> compress_lineorder(const std::filesystem::path& data_dir,
                                                           codecs::CodecId codec, bool force) {
  const auto file = data_dir / storage::kCatalogFileName;
  if (!std::filesystem::exists(file)) {
    throw IoError("no dataset at " + data_dir.string() + " (missing catalog.txt)");
  }
  auto catalog = storage::Catalog::load(file);
  std::vector<storage::CompressionReport> reports;
  for (const auto col : kCompressibleColumns) {
    if (!force && catalog.at(kLineorder, col).codec == codec) continue;
    reports.push_back(storage::compress_existing_column(catalog, file, kLineorder, col, codec));
  }
  return reports;
}

std::optional<codecs::CodecId> lineorder_codec(const storage::Catalog& catalog) {
  std::optional<codecs::CodecId> seen;
  for (const auto col : kCompressibleColumns) {
    const auto c = catalog.at(kLineorder, col).codec;
    if (seen && *seen != c) return std::nullopt;
    seen = c;
  }
  return seen;
}

}  // namespace colcrunch::ssb
