#include "iprop/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iprop/error.hpp"
#include "iprop/random.hpp"
#include "iprop/text.hpp"

namespace iprop {

using nlohmann::json;

DatasetFormat parse_dataset_format(std::string_view name) {
  const auto n = text::fold_case(name);
  if (n == "csv") return DatasetFormat::csv;
  if (n == "json") return DatasetFormat::json;
  if (n == "jsonl") return DatasetFormat::jsonl;
  throw Error(ErrorCode::InvalidConfig, "unsupported dataset format '" + std::string(name) + "'");
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  try {
    return parse_dataset_format(ext);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedContent,
                "cannot tell the format of " + path.string() + " (expected .csv, .json or .jsonl)",
                nlohmann::json{{"path", path.string()}});
  }
}

namespace {

struct RawRow {
  std::size_t record = 0;  // 0-based data record index
  std::size_t line = 0;    // 1-based source line
  std::optional<std::string> text;
  std::optional<std::string> label;
};

struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

[[noreturn]] void malformed(const std::string& what, std::size_t line) {
  throw Error(ErrorCode::MalformedContent, what + " (line " + std::to_string(line) + ")",
              json{{"line", line}});
}

std::vector<CsvRecord> parse_csv(std::string_view s) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < s.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool end_of_record = false;
    while (!end_of_record) {
      if (i < s.size() && s[i] == '"') {
        // quoted field
        const std::size_t open_line = line;
        ++i;
        for (;;) {
          if (i >= s.size()) malformed("unterminated quoted field", open_line);
          if (s[i] == '"') {
            if (i + 1 < s.size() && s[i + 1] == '"') {
              field += '"';
              i += 2;
              continue;
            }
            ++i;
            break;
          }
          if (s[i] == '\n') ++line;
          field += s[i++];
        }
        if (i < s.size() && s[i] != ',' && s[i] != '\n' && s[i] != '\r') {
          malformed("unexpected character after closing quote", line);
        }
      } else {
        while (i < s.size() && s[i] != ',' && s[i] != '\n' && s[i] != '\r') field += s[i++];
      }
      rec.fields.push_back(std::move(field));
      field.clear();
      if (i >= s.size()) {
        end_of_record = true;
      } else if (s[i] == ',') {
        ++i;
        // a trailing comma at end of input still yields an empty last field
        if (i >= s.size()) rec.fields.emplace_back();
        if (i >= s.size()) end_of_record = true;
      } else {
        if (s[i] == '\r') ++i;
        if (i < s.size() && s[i] == '\n') ++i;
        ++line;
        end_of_record = true;
      }
    }
    const bool blank = rec.fields.size() == 1 && text::trim(rec.fields[0]).empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RawRow> rows_from_csv(std::string_view content, std::string_view text_field,
                                  std::string_view label_field) {
  auto records = parse_csv(content);
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "CSV has no header row");
  const auto& header = records.front().fields;
  auto column = [&](std::string_view name) -> std::size_t {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (text::trim(header[c]) == name) return c;
    }
    throw Error(ErrorCode::MissingField,
                "CSV header has no column '" + std::string(name) + "'",
                json{{"field", name}, {"line", records.front().line}});
  };
  const auto text_col = column(text_field);
  const auto label_col = column(label_field);

  std::vector<RawRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() > header.size()) {
      malformed("row has " + std::to_string(rec.fields.size()) + " fields, header has " +
                    std::to_string(header.size()),
                rec.line);
    }
    RawRow row{r - 1, rec.line, std::nullopt, std::nullopt};
    if (text_col < rec.fields.size()) row.text = rec.fields[text_col];
    if (label_col < rec.fields.size()) row.label = rec.fields[label_col];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<std::string> scalar_field(const json& obj, std::string_view key, std::size_t record) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number() || it->is_boolean()) return it->dump();
  throw Error(ErrorCode::MalformedContent,
              "field '" + std::string(key) + "' of record " + std::to_string(record) +
                  " is not a scalar",
              json{{"record", record}});
}

RawRow row_from_object(const json& obj, std::size_t record, std::size_t line,
                       std::string_view text_field, std::string_view label_field) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::MalformedContent, "record " + std::to_string(record) + " is not an object",
                json{{"record", record}, {"line", line}});
  }
  return RawRow{record, line, scalar_field(obj, text_field, record),
                scalar_field(obj, label_field, record)};
}

std::vector<RawRow> rows_from_json(std::string_view content, std::string_view text_field,
                                   std::string_view label_field) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedContent, std::string("invalid JSON: ") + e.what(),
                json{{"byte", e.byte}});
  }
  if (!doc.is_array()) {
    throw Error(ErrorCode::MalformedContent, "JSON dataset must be a top-level array of objects");
  }
  std::vector<RawRow> rows;
  for (std::size_t r = 0; r < doc.size(); ++r) {
    rows.push_back(row_from_object(doc[r], r, 0, text_field, label_field));
  }
  return rows;
}

std::vector<RawRow> rows_from_jsonl(std::string_view content, std::string_view text_field,
                                    std::string_view label_field) {
  std::vector<RawRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    ++line_no;
    const auto line = text::trim(content.substr(start, end - start));
    if (!line.empty()) {
      const std::size_t record = rows.size();
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedContent,
                    "invalid JSON on line " + std::to_string(line_no) + ": " + e.what(),
                    json{{"line", line_no}, {"record", record}});
      }
      rows.push_back(row_from_object(obj, record, line_no, text_field, label_field));
    }
    if (end == content.size()) break;
    start = end + 1;
  }
  return rows;
}

}  // namespace

Dataset load_dataset(std::string_view content, DatasetFormat format, std::string_view text_field,
                     std::string_view label_field) {
  if (!text::is_valid_utf8(content)) {
    throw Error(ErrorCode::MalformedContent, "content is not valid UTF-8");
  }
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);

  std::vector<RawRow> rows;
  switch (format) {
    case DatasetFormat::csv: rows = rows_from_csv(content, text_field, label_field); break;
    case DatasetFormat::json: rows = rows_from_json(content, text_field, label_field); break;
    case DatasetFormat::jsonl: rows = rows_from_jsonl(content, text_field, label_field); break;
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no records");

  std::vector<std::string> labels;
  std::vector<Instance> instances;
  instances.reserve(rows.size());
  for (const auto& row : rows) {
    auto missing = [&](std::string_view field) {
      return Error(ErrorCode::MissingField,
                   "record " + std::to_string(row.record) + " lacks a non-empty '" +
                       std::string(field) + "'",
                   json{{"record", row.record}, {"line", row.line}, {"field", field}});
    };
    if (!row.text || text::trim(*row.text).empty()) throw missing(text_field);
    if (!row.label || text::trim(*row.label).empty()) throw missing(label_field);

    std::string label(text::trim(*row.label));
    auto known = std::find_if(labels.begin(), labels.end(),
                              [&](const std::string& l) { return text::iequals(l, label); });
    if (known == labels.end()) {
      labels.push_back(label);
    } else {
      label = *known;
    }
    instances.push_back(Instance{instances.size(), std::string(text::trim(*row.text)), label});
  }
  if (labels.size() < 2) {
    throw Error(ErrorCode::SingleLabelDataset,
                "dataset needs at least 2 distinct labels, found only '" + labels.front() + "'",
                json{{"labels", labels}});
  }
  return Dataset{std::move(instances), LabelSet(std::move(labels))};
}

Dataset load_dataset_file(const std::filesystem::path& path, DatasetFormat format,
                          std::string_view text_field, std::string_view label_field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MalformedContent, "cannot read dataset file " + path.string(),
                json{{"path", path.string()}});
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_dataset(buf.str(), format, text_field, label_field);
}

std::string to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& inst : dataset.instances) {
    out += json{{"text", inst.text}, {"label", inst.gold_label}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::string> check_label_consistency(std::string_view task_description,
                                                 const Dataset& dataset) {
  const auto haystack = text::fold_case(task_description);
  std::vector<std::string> missing;
  for (const auto& label : dataset.label_set.labels()) {
    if (text::find_whole_word(haystack, text::fold_case(label)) == std::string_view::npos) {
      missing.push_back(label);
    }
  }
  return missing;
}

Splits stratified_split(const Dataset& dataset, const std::array<double, 3>& ratios,
                        std::uint64_t seed) {
  const auto& labels = dataset.label_set;
  std::vector<std::vector<InstanceId>> groups(labels.size());
  for (const auto& inst : dataset.instances) {
    auto idx = labels.index_of(inst.gold_label);
    if (!idx) throw Error(ErrorCode::MalformedContent, "instance label outside label set");
    groups[*idx].push_back(inst.id);
  }
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].size() < 3) {
      throw Error(ErrorCode::StratificationImpossible,
                  "label '" + labels[k] + "' has " + std::to_string(groups[k].size()) +
                      " instances; stratified splitting needs at least 3",
                  json{{"label", labels[k]}, {"count", groups[k].size()}});
    }
  }

  std::array<std::vector<InstanceId>, 3> parts;
  std::array<double, 3> target{0, 0, 0};    // running exact totals
  std::array<std::size_t, 3> given{0, 0, 0};  // running allocated totals

  for (std::size_t k = 0; k < groups.size(); ++k) {
    auto& ids = groups[k];
    Rng rng(derive_seed(seed, "split/" + std::to_string(k)));
    rng.shuffle(std::span(ids));

    const auto n = ids.size();
    std::array<std::size_t, 3> count{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double exact = static_cast<double>(n) * ratios[s];
      target[s] += exact;
      count[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      frac[s] = exact - static_cast<double>(count[s]);
      assigned += count[s];
    }
    // Largest remainder; ties go to the split furthest behind its overall target.
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (std::abs(frac[a] - frac[b]) > 1e-9) return frac[a] > frac[b];
      const double da = target[a] - static_cast<double>(given[a] + count[a]);
      const double db = target[b] - static_cast<double>(given[b] + count[b]);
      return da > db + 1e-9;
    });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++count[order[r % 3]];

    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      parts[s].insert(parts[s].end(), ids.begin() + static_cast<std::ptrdiff_t>(pos),
                      ids.begin() + static_cast<std::ptrdiff_t>(pos + count[s]));
      pos += count[s];
      given[s] += count[s];
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return Splits{std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

std::vector<InstanceId> sample_subset(const std::vector<InstanceId>& split, std::size_t size,
                                      std::uint64_t seed, SubsetPurpose purpose) {
  if (size == 0 || size > split.size()) {
    throw Error(ErrorCode::SizeTooLarge,
                "subset size " + std::to_string(size) + " must be in [1, " +
                    std::to_string(split.size()) + "]",
                json{{"size", size}, {"available", split.size()}});
  }
  std::vector<InstanceId> pool(split);
  std::sort(pool.begin(), pool.end());
  Rng rng(derive_seed(seed, purpose == SubsetPurpose::alpha ? "subset/alpha" : "subset/beta"));
  // partial Fisher-Yates: the first `size` slots become the sample
  for (std::size_t i = 0; i < size; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace iprop
