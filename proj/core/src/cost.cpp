#include "p2pfaas/cost.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "p2pfaas/errors.hpp"

namespace p2pfaas {

double serverless_cost(const CostInputs& inputs) {
    if (inputs.num_batches < 1) throw ValidationError("serverless cost needs num_batches >= 1");
    if (inputs.lambda_rate_usd_per_s < 0.0 || inputs.ec2_rate_usd_per_s < 0.0 || inputs.computation_time_s < 0.0) {
        throw ValidationError("cost inputs must be non-negative");
    }
    return (inputs.lambda_rate_usd_per_s * static_cast<double>(inputs.num_batches) + inputs.ec2_rate_usd_per_s) *
           inputs.computation_time_s;
}

double instance_cost(double ec2_rate_usd_per_s, double computation_time_s) {
    if (ec2_rate_usd_per_s < 0.0 || computation_time_s < 0.0) {
        throw ValidationError("cost inputs must be non-negative");
    }
    return ec2_rate_usd_per_s * computation_time_s;
}

CostComparison compare_architectures(const CostReport& serverless_report, const CostReport& instance_report) {
    if (instance_report.cost_per_peer_usd == 0.0) throw ValidationError("instance cost is zero; ratio undefined");
    if (instance_report.inputs.computation_time_s <= 0.0 || serverless_report.inputs.computation_time_s <= 0.0) {
        throw ValidationError("computation times must be positive for comparison");
    }
    CostComparison cmp;
    cmp.cost_ratio = serverless_report.cost_per_peer_usd / instance_report.cost_per_peer_usd;
    cmp.time_reduction_pct = 100.0 *
                             (instance_report.inputs.computation_time_s - serverless_report.inputs.computation_time_s) /
                             instance_report.inputs.computation_time_s;
    return cmp;
}

const std::array<ReferenceServerlessCell, 4> kReferenceServerlessTable = {{
    {1024, 15, "t2-small", 4400, 41.2, 0.00000639, 0.0000573, 0.03567},
    {512, 30, "t2-small", 2800, 28.1, 0.00000639, 0.0000362, 0.03069},
    {128, 118, "t2-small", 1800, 12.9, 0.00000639, 0.0000233, 0.03451},
    {64, 235, "t2-small", 1700, 10.5, 0.00000639, 0.0000220, 0.05435},
}};

const std::array<ReferenceInstanceCell, 4> kReferenceInstanceTable = {{
    {1024, "t2-large", 258.0, 0.00002578, 0.00665},
    {512, "t2-large", 278.4, 0.00002578, 0.00717},
    {128, "t2-large", 330.4, 0.00002578, 0.00851},
    {64, "t2-large", 394.8, 0.00002578, 0.01017},
}};

std::vector<CellCheck> check_reference_cost_tables(double tolerance_usd) {
    std::vector<CellCheck> checks;
    checks.reserve(8);
    for (const ReferenceServerlessCell& cell : kReferenceServerlessTable) {
        CostInputs inputs;
        inputs.num_batches = cell.num_batches;
        inputs.lambda_rate_usd_per_s = cell.lambda_rate_usd_per_s;
        inputs.ec2_rate_usd_per_s = cell.ec2_rate_usd_per_s;
        inputs.computation_time_s = cell.compute_time_s;
        inputs.lambda_memory_mb = cell.lambda_memory_mb;
        inputs.batch_size = cell.batch_size;
        const double computed = serverless_cost(inputs);
        const double diff = std::fabs(computed - cell.published_cost_usd);
        checks.push_back({"serverless", cell.batch_size, computed, cell.published_cost_usd, diff,
                          diff <= tolerance_usd});
    }
    for (const ReferenceInstanceCell& cell : kReferenceInstanceTable) {
        const double computed = instance_cost(cell.ec2_rate_usd_per_s, cell.compute_time_s);
        const double diff = std::fabs(computed - cell.published_cost_usd);
        checks.push_back({"instance", cell.batch_size, computed, cell.published_cost_usd, diff,
                          diff <= tolerance_usd});
    }
    return checks;
}

std::string render_reference_cost_tables(double tolerance_usd) {
    std::ostringstream os;
    os << std::fixed;

    // Field-per-row, one column per batch size, mirroring the published layout.
    const auto row = [&os](const char* label, auto format_cell) {
        os << std::left << std::setw(34) << label << std::right;
        for (std::size_t i = 0; i < 4; ++i) os << std::setw(13) << format_cell(i);
        os << "\n";
    };

    os << "Time and cost of computing gradients per peer, with serverless fan-out (4 peers, VGG11, MNIST)\n";
    const auto& s = kReferenceServerlessTable;
    row("Batch Size", [&](std::size_t i) { return std::to_string(s[i].batch_size); });
    row("Number of batches", [&](std::size_t i) { return std::to_string(s[i].num_batches); });
    row("Instance Type", [&](std::size_t i) { return std::string(s[i].instance_type); });
    row("Lambda Memory size (MB)", [&](std::size_t i) { return std::to_string(s[i].lambda_memory_mb); });
    row("Time to Compute Gradients (s)", [&](std::size_t i) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(1) << s[i].compute_time_s;
        return cell.str();
    });
    row("EC2 instance Cost (USD/s)", [&](std::size_t i) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(8) << s[i].ec2_rate_usd_per_s;
        return cell.str();
    });
    row("Lambda Cost (USD/s)", [&](std::size_t i) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(7) << s[i].lambda_rate_usd_per_s;
        return cell.str();
    });
    row("Compute Gradients Cost per Peer", [&](std::size_t i) {
        CostInputs inputs{s[i].num_batches, s[i].lambda_rate_usd_per_s, s[i].ec2_rate_usd_per_s, s[i].compute_time_s,
                          s[i].lambda_memory_mb, s[i].batch_size};
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(5) << serverless_cost(inputs);
        return cell.str();
    });

    os << "\nTime and cost of computing gradients per peer, without serverless (4 peers, VGG11, MNIST)\n";
    const auto& t = kReferenceInstanceTable;
    row("Batch Size", [&](std::size_t i) { return std::to_string(t[i].batch_size); });
    row("Instance Type", [&](std::size_t i) { return std::string(t[i].instance_type); });
    row("Time to Compute Gradients (s)", [&](std::size_t i) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(1) << t[i].compute_time_s;
        return cell.str();
    });
    row("EC2 instance Cost (USD/s)", [&](std::size_t i) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(8) << t[i].ec2_rate_usd_per_s;
        return cell.str();
    });
    row("Compute Gradients Cost per Peer", [&](std::size_t i) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(5) << instance_cost(t[i].ec2_rate_usd_per_s, t[i].compute_time_s);
        return cell.str();
    });

    os << "\nPer-cell check against published values (tolerance " << std::setprecision(4) << tolerance_usd
       << " USD)\n";
    const std::vector<CellCheck> checks = check_reference_cost_tables(tolerance_usd);
    for (const CellCheck& check : checks) {
        os << (check.ok ? "  [ok]      " : "  [MISMATCH]") << " " << check.table << " batch " << std::setw(5)
           << check.batch_size << ": computed " << std::setprecision(6) << check.computed_usd << " published "
           << check.published_usd << " (diff " << check.diff_usd << ")\n";
    }

    CostInputs batch1024{15, 0.0000573, 0.00000639, 41.2, 4400, 1024};
    const double ratio = serverless_cost(batch1024) / instance_cost(0.00002578, 258.0);
    os << "\nbatch-1024 cost ratio serverless/instance: " << std::setprecision(3) << ratio << "\n";
    return os.str();
}

std::string reference_cost_tables_csv() {
    std::ostringstream os;
    os << "table,batch_size,num_batches,lambda_memory_mb,compute_time_s,ec2_rate_usd_per_s,lambda_rate_usd_per_s,"
          "computed_cost_usd,published_cost_usd\n";
    os << std::setprecision(10);
    for (const ReferenceServerlessCell& cell : kReferenceServerlessTable) {
        CostInputs inputs{cell.num_batches, cell.lambda_rate_usd_per_s, cell.ec2_rate_usd_per_s, cell.compute_time_s,
                          cell.lambda_memory_mb, cell.batch_size};
        os << "serverless," << cell.batch_size << "," << cell.num_batches << "," << cell.lambda_memory_mb << ","
           << cell.compute_time_s << "," << cell.ec2_rate_usd_per_s << "," << cell.lambda_rate_usd_per_s << ","
           << serverless_cost(inputs) << "," << cell.published_cost_usd << "\n";
    }
    for (const ReferenceInstanceCell& cell : kReferenceInstanceTable) {
        os << "instance," << cell.batch_size << ",,," << cell.compute_time_s << "," << cell.ec2_rate_usd_per_s << ",,"
           << instance_cost(cell.ec2_rate_usd_per_s, cell.compute_time_s) << "," << cell.published_cost_usd << "\n";
    }
    return os.str();
}

}  // namespace p2pfaas
