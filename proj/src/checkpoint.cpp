#include "dampe/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "dampe/error.hpp"

namespace dampe {

namespace fs = std::filesystem;

void save_params(const std::string& dir, const ParamStore& store,
                 const std::vector<std::string>& names) {
    fs::create_directories(dir);
    std::ofstream manifest(dir + "/manifest.txt");
    if (!manifest) throw DataFault("cannot open for writing: " + dir + "/manifest.txt");
    for (const std::string& name : names) {
        const DenseMatrix& m = store.value(name);
        manifest << name << ' ' << m.rows << ' ' << m.cols << '\n';
        write_matrix_file(dir + "/" + name + ".mat", m);
    }
}

void load_params(const std::string& dir, ParamStore& store) {
    std::ifstream manifest(dir + "/manifest.txt");
    if (!manifest) throw DataFault("cannot open checkpoint manifest: " + dir + "/manifest.txt");
    std::string name;
    std::size_t rows = 0, cols = 0;
    while (manifest >> name >> rows >> cols) {
        DenseMatrix m = read_matrix_file(dir + "/" + name + ".mat");
        check_data(m.rows == rows && m.cols == cols,
                   "checkpoint shape mismatch for parameter " + name);
        if (store.has(name)) {
            check_data(store.value(name).same_shape(m),
                       "checkpoint parameter " + name + " conflicts with existing shape");
            store.value(name) = std::move(m);
        } else {
            store.add(name, std::move(m));
        }
    }
}

bool checkpoint_exists(const std::string& dir) {
    return fs::exists(dir + "/manifest.txt");
}

}  // namespace dampe
