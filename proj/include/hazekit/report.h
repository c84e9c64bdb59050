#pragma once

#include <string>
#include <vector>

namespace hazekit {

// Merges one or more attack-run directories (manifest.json + metrics CSVs +
// optional dumped images) into:
//   merged_metrics.csv   every per-image row, prefixed with its run name
//   io_comparison.csv    mean input-PSNR vs output-PSNR per (run, kind, eps, k)
//   mscn_clean.csv / mscn_adv.csv   aggregate MSCN histograms over all dumped
//                                   clean / adversarial images (when present)
// Returns the list of files written (relative to out_dir).
std::vector<std::string> build_report(const std::vector<std::string>& run_dirs,
                                      const std::string& out_dir);

}  // namespace hazekit
