#include "okode/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "okode/errors.hpp"

namespace okode {

namespace {

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& M) {
    char buf[64];
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", M(i, j));
            out << (j ? " " : "") << buf;
        }
        out << "\n";
    }
}

Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                            const std::string& what) {
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        std::string line;
        if (!std::getline(in, line)) {
            throw ValidationError("model file truncated inside " + what + " block");
        }
        std::istringstream row(line);
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(row >> M(i, j))) {
                throw ValidationError("model file: bad " + what + " row " + std::to_string(i));
            }
        }
    }
    return M;
}

}  // namespace

void save_model(const OdeModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open '" + path + "' for writing");
    }
    char buf[64];
    out << "okode_model 1\n";
    out << "family " << to_string(model.kernel().family()) << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", model.kernel().scalar().gamma());
    out << "gamma " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", model.ridge());
    out << "lambda_h " << buf << "\n";
    out << "p " << model.dim() << "\n";
    out << "m " << model.support_size() << "\n";
    if (model.kernel().has_structure()) {
        out << "C\n";
        write_matrix(out, model.kernel().structure().matrix());
    }
    out << "anchors\n";
    write_matrix(out, model.anchors());
    out << "coeffs\n";
    write_matrix(out, model.coeffs());
    if (!out) {
        throw ValidationError("write to '" + path + "' failed");
    }
}

OdeModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open '" + path + "' for reading");
    }
    std::string key, value;
    if (!(in >> key >> value) || key != "okode_model" || value != "1") {
        throw ValidationError("'" + path + "' is not an okode model file");
    }
    std::string family_name;
    double gamma = 0, lambda_h = 0;
    Eigen::Index p = 0, m = 0;
    if (!(in >> key >> family_name) || key != "family")
        throw ValidationError("model file: expected 'family'");
    if (!(in >> key >> gamma) || key != "gamma")
        throw ValidationError("model file: expected 'gamma'");
    if (!(in >> key >> lambda_h) || key != "lambda_h")
        throw ValidationError("model file: expected 'lambda_h'");
    if (!(in >> key >> p) || key != "p") throw ValidationError("model file: expected 'p'");
    if (!(in >> key >> m) || key != "m") throw ValidationError("model file: expected 'm'");
    if (p < 1 || m < 1) throw ValidationError("model file: p and m must be positive");

    const KernelFamily family = kernel_family_from_string(family_name);
    std::string block;
    in >> block;
    in.ignore();  // newline after block tag
    std::optional<StructureMatrix> C;
    if (family != KernelFamily::transformable) {
        if (block != "C") throw ValidationError("model file: expected 'C' block");
        C = StructureMatrix(read_matrix(in, p, p, "C"));
        in >> block;
        in.ignore();
    }
    if (block != "anchors") throw ValidationError("model file: expected 'anchors' block");
    Eigen::MatrixXd anchors = read_matrix(in, m, p, "anchors");
    in >> block;
    in.ignore();
    if (block != "coeffs") throw ValidationError("model file: expected 'coeffs' block");
    Eigen::MatrixXd coeffs = read_matrix(in, m, p, "coeffs");

    OperatorKernel kernel = OperatorKernel::make(family, GaussianKernel(gamma), std::move(C));
    return OdeModel(std::move(kernel), std::move(anchors), std::move(coeffs), lambda_h);
}

}  // namespace okode
