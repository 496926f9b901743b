// Regenerates the files under data/: the reference arm model and the
// phantom meshes used by the example scenario configs.
#include "ius/arm_model.hpp"
#include "ius/tri_mesh.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Write reference data files"};
    std::string out_dir = "data";
    app.add_option("--out", out_dir, "output directory");
    CLI11_PARSE(app, argc, argv);

    const std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    ius::save_arm_model(ius::reference_arm(), out / "reference_arm.json");
    ius::save_off(ius::make_flat_phantom({0.55, 0.0, 0.0}, 0.2, 0.02), out / "flat_phantom.off");
    ius::save_off(ius::make_hemisphere_phantom({0.55, 0.0, 0.0}, 0.05, 0.2, 0.0025), out / "hemisphere_phantom.off");
    std::cout << "wrote reference data to " << out << "\n";
    return 0;
}
