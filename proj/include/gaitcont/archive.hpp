#pragma once

#include "gaitcont/homotopy.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace gaitcont {

inline constexpr int kArchiveSchemaVersion = 1;

struct HomotopyRecord {
    std::string query;  // query file contents, as given
    int branch = -1;
    int gait = -1;
    GaitPoint reference;
    std::vector<GhmIterate> path;
    bool converged = false;
    bool reference_satisfied = false;
    GaitPoint root;
    Vec slacks;
    std::string diagnostic;
};

struct FamilyArchive {
    int schema_version = kArchiveSchemaVersion;
    std::string model;  // loadable model config (JSON text)
    std::string model_name;
    std::map<std::string, double> parameters;
    Dims dims;
    double scan_a = 0;
    double scan_b = 0;
    int scan_steps = 0;
    std::vector<IndicatorSample> indicator;
    std::string classification;
    std::vector<SingularEG> singular;
    std::vector<Branch> branches;
    std::vector<HomotopyRecord> homotopy;

    std::size_t gait_count() const;
};

FamilyArchive make_archive(const GaitModel& model, const GaitFamily& family, double a, double b, int steps);

// JSON text with round-trip doubles; fixed key order, no timestamps.
std::string write_archive(const FamilyArchive& archive);
FamilyArchive read_archive(const std::string& text);
void save_archive(const FamilyArchive& archive, const std::string& path);
FamilyArchive load_archive(const std::string& path);

// Model stored in the archive.
std::shared_ptr<const GaitModel> archive_model(const FamilyArchive& archive);

struct DiagnosticReport {
    std::vector<IndicatorSample> samples;
    ScanClass classification = ScanClass::Ok;
    std::string remediation;
};

DiagnosticReport make_report(const std::vector<IndicatorSample>& samples, std::size_t roots_found);
std::string format_report(const DiagnosticReport& report);

std::string summary_table(const FamilyArchive& archive);

std::string export_csv(const FamilyArchive& archive);
std::string export_svg(const FamilyArchive& archive);
// Joint trajectories of every gait sampled at fps, as JSON text.
std::string export_frames(const GaitModel& model, const FamilyArchive& archive, double fps = 60.0);

struct AuditEntry {
    std::string branch;
    int index = 0;
    double stored = 0;
    double recomputed = 0;
};

struct AuditResult {
    std::vector<AuditEntry> entries;
    double max_residual = 0;
    double max_mismatch = 0;
    bool ok(double residual_tol = 1e-8, double match_tol = 1e-12) const {
        return max_residual < residual_tol && max_mismatch <= match_tol;
    }
};

AuditResult audit_archive(const GaitModel& model, const FamilyArchive& archive, const FlowOptions& opts = {});

}  // namespace gaitcont
