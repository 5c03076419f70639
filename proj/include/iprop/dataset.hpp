#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "iprop/types.hpp"

namespace iprop {

enum class DatasetFormat { csv, json, jsonl };

DatasetFormat parse_dataset_format(std::string_view name);
/// Guesses the format from a file extension (.csv/.json/.jsonl).
DatasetFormat format_from_path(const std::filesystem::path& path);

/// Parses a labeled corpus. Instance ids follow file order from 0; text and
/// labels are trimmed; the label set keeps first-occurrence order and casing,
/// and every gold label is normalised to that casing.
///
/// Errors: MissingField, EmptyDataset, MalformedContent (details carry the
/// 1-based line or 0-based record index), SingleLabelDataset.
Dataset load_dataset(std::string_view content, DatasetFormat format,
                     std::string_view text_field = "text", std::string_view label_field = "label");

Dataset load_dataset_file(const std::filesystem::path& path, DatasetFormat format,
                          std::string_view text_field = "text",
                          std::string_view label_field = "label");

/// Canonical JSONL rendering, one {"text","label"} object per line.
std::string to_jsonl(const Dataset& dataset);

/// Labels not mentioned in the task description as case-insensitive whole
/// words, in label-set order. Empty means consistent.
std::vector<std::string> check_label_consistency(std::string_view task_description,
                                                 const Dataset& dataset);

/// Per-label largest-remainder allocation of train/validation/test. Throws
/// StratificationImpossible if some label has fewer than 3 instances.
Splits stratified_split(const Dataset& dataset, const std::array<double, 3>& ratios,
                        std::uint64_t seed);

enum class SubsetPurpose { alpha, beta };

/// Uniform sample without replacement, returned sorted. The purpose is mixed
/// into the seed so alpha and beta draws differ. Throws SizeTooLarge.
std::vector<InstanceId> sample_subset(const std::vector<InstanceId>& split, std::size_t size,
                                      std::uint64_t seed, SubsetPurpose purpose);

}  // namespace iprop
