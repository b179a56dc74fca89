#pragma once

#include <string>

#include "xsslab/templating.hpp"

namespace xsslab {

/** One clustered template attributed to the scanner whose traffic produced it. */
struct TemplateRecord {
  std::string scanner_id;
  Template tmpl;
};

std::string template_record_to_jsonl(const TemplateRecord& r);
TemplateRecord template_record_from_jsonl(const std::string& line);

/**
 * Entry point for the command-line tool. Subcommands: serve, mock-scan, extract,
 * template, evaluate, correlate, pipeline, review-queue. Returns 0 on success,
 * 1 on runtime failure, 2 on usage errors.
 */
int run_cli(int argc, char** argv);

}  // namespace xsslab
