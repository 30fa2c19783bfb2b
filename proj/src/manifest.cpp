#include "idcv/manifest.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace idcv {

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);

    DatasetManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        ManifestEntry e;
        std::string sigma_tok, seed_tok;
        if (!std::getline(ls, e.clean_path, '\t') ||
            !std::getline(ls, e.kernel_path, '\t') ||
            !std::getline(ls, sigma_tok, '\t') ||
            !std::getline(ls, seed_tok))
            throw std::runtime_error("manifest: malformed line " +
                                     std::to_string(lineno) + " in " + path);
        try {
            e.sigma = std::stod(sigma_tok);
            e.seed = std::stoull(seed_tok);
        } catch (const std::exception&) {
            throw std::runtime_error("manifest: bad numeric field on line " +
                                     std::to_string(lineno) + " in " + path);
        }
        if (e.sigma < 0.0)
            throw std::runtime_error("manifest: negative sigma on line " +
                                     std::to_string(lineno) + " in " + path);
        m.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot write " + path);
    out << std::setprecision(17);
    for (const auto& e : m)
        out << e.clean_path << '\t' << e.kernel_path << '\t' << e.sigma << '\t'
            << e.seed << '\n';
    if (!out) throw std::runtime_error("manifest: write failed for " + path);
}

} // namespace idcv
