#include "hazekit/report.h"

#include <filesystem>
#include <json.hpp>

#include "hazekit/error.h"
#include "hazekit/image.h"
#include "hazekit/metrics.h"
#include "hazekit/util.h"

namespace hazekit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_manifest(const std::string& run_dir) {
    const auto bytes = read_file(path_join(run_dir, "manifest.json"));
    json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) throw_format(run_dir + ": unreadable manifest.json");
    return j;
}

}  // namespace

std::vector<std::string> build_report(const std::vector<std::string>& run_dirs,
                                      const std::string& out_dir) {
    if (run_dirs.empty()) throw_config("report needs at least one run directory");
    ensure_dir(out_dir);
    std::vector<std::string> written;

    Csv merged;
    merged.header = {"run", "id", "epsilon", "attack_kind", "steps", "psnr_db", "ssim", "mse"};
    Csv iocmp;
    iocmp.header = {"run",          "attack_kind",  "epsilon",      "steps",
                    "mean_psnr_in", "mean_psnr_out", "mean_ssim_in", "mean_ssim_out"};
    std::vector<Tensor> clean_maps, adv_maps;

    for (const std::string& dir : run_dirs) {
        const json man = load_manifest(dir);
        if (man.value("command", "") != "attack")
            throw_config(dir + ": report consumes attack runs, found command '" +
                         man.value("command", std::string("?")) + "'");
        const std::string run_name = fs::path(dir).filename().string();
        const std::string kind = man["config"]["kind"].get<std::string>();

        for (const auto& agg : man["aggregates"]) {
            iocmp.rows.push_back({run_name, kind, fmt_double(agg["epsilon"].get<double>()),
                                  std::to_string(agg["steps"].get<int>()),
                                  fmt_double(agg["mean_psnr_in"].get<double>()),
                                  fmt_double(agg["mean_psnr_out"].get<double>()),
                                  fmt_double(agg["mean_ssim_in"].get<double>()),
                                  fmt_double(agg["mean_ssim_out"].get<double>())});
        }

        for (const auto& item : man["outputs"]) {
            const std::string name = item.get<std::string>();
            if (name.rfind("metrics", 0) != 0 || name.find(".csv") == std::string::npos) continue;
            const auto rep = metrics::MetricsReport::read_csv(path_join(dir, name));
            std::string steps = "?";
            // metrics files are named metrics.csv or metrics_k<k>.csv
            if (name == "metrics.csv") {
                steps = std::to_string(man["config"]["steps"][0].get<int>());
            } else {
                steps = name.substr(std::string("metrics_k").size());
                steps = steps.substr(0, steps.find('.'));
            }
            for (const auto& r : rep.rows)
                merged.rows.push_back({run_name, r.id, fmt_float(r.epsilon), r.attack_kind, steps,
                                       fmt_double(r.psnr_db), fmt_double(r.ssim), fmt_double(r.mse)});
        }

        const fs::path images = fs::path(dir) / "images";
        if (fs::is_directory(images)) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(images))
                if (entry.path().extension() == ".ppm") files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                const std::string stem = f.filename().string();
                if (stem.rfind("clean_", 0) == 0)
                    clean_maps.push_back(metrics::mscn(read_ppm(f.string())));
                else if (stem.rfind("adv_", 0) == 0)
                    adv_maps.push_back(metrics::mscn(read_ppm(f.string())));
            }
        }
    }

    write_file_atomic(path_join(out_dir, "merged_metrics.csv"), merged.to_string());
    written.push_back("merged_metrics.csv");
    write_file_atomic(path_join(out_dir, "io_comparison.csv"), iocmp.to_string());
    written.push_back("io_comparison.csv");

    auto write_hist = [&](const std::vector<Tensor>& maps, const std::string& name) {
        if (maps.empty()) return;
        const metrics::Histogram h = metrics::mscn_histogram(maps);
        Csv csv;
        csv.header = {"bin_center", "mass"};
        for (int i = 0; i < metrics::Histogram::kBins; ++i)
            csv.rows.push_back({fmt_double(h.centers[static_cast<size_t>(i)]),
                                fmt_double(h.mass[static_cast<size_t>(i)])});
        write_file_atomic(path_join(out_dir, name), csv.to_string());
        written.push_back(name);
    };
    write_hist(clean_maps, "mscn_clean.csv");
    write_hist(adv_maps, "mscn_adv.csv");
    return written;
}

}  // namespace hazekit
