#pragma once

#include <string>

#include "pbd/fourier.hpp"
#include "pbd/learner.hpp"
#include "pbd/model.hpp"
#include "pbd/structure.hpp"

namespace pbd {

// JSON output uses a small emitter with canonical key order and
// 17-significant-digit floats so identical runs produce identical bytes.
// Parsing goes through nlohmann::json.

std::string model_to_json(const PbdModel& model);
PbdModel model_from_json(const std::string& text);

std::string sketch_to_json(const FourierSketch& sk);
FourierSketch sketch_from_json(const std::string& text);

std::string report_to_json(const LearnReport& report);

std::string sparsify_meta_to_json(const SparsifyResult& result, double tv_exact_value);

std::string error_to_json(const std::string& kind, const std::string& detail);

// Newline-delimited decimal integers, optional trailing newline.
std::string samples_to_text(const SampleSet& samples);
SampleSet samples_from_text(const std::string& text);

// File helpers; throw std::runtime_error with the path on failure.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// %.17g rendering shared by every emitter.
std::string format_double(double v);

}  // namespace pbd
