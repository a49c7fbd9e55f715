// Stand-in external model for tests. Speaks the newline-delimited JSON
// protocol on stdin/stdout.
//
//   fake_model_server [--mode M] [--p P] [--transcript FILE]
//
// Modes: ok (default), fail, malformed, sleep, exit, bad-labels, wrong-dims.
// classify answers {"MCC": 1-P, "PLD": P}; segment thresholds at 0.5.

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "segroute/svol.hpp"

using nlohmann::json;

int main(int argc, char** argv)
{
    CLI::App app{"fake model server"};
    std::string mode = "ok";
    double p = 0.25;
    std::string transcript;
    app.add_option("--mode", mode);
    app.add_option("--p", p);
    app.add_option("--transcript", transcript);
    CLI11_PARSE(app, argc, argv);

    std::ofstream log;
    if (!transcript.empty())
        log.open(transcript, std::ios::app);

    std::string line;
    while (std::getline(std::cin, line)) {
        if (log)
            log << line << '\n' << std::flush;
        json request = json::parse(line, nullptr, false);
        const std::string op = request.is_object() ? request.value("op", "") : "";
        if (op == "shutdown") {
            std::cout << R"({"ok":true})" << std::endl;
            return 0;
        }
        if (mode == "exit")
            return 3;
        if (mode == "malformed") {
            std::cout << "this is not json" << std::endl;
            continue;
        }
        if (mode == "fail") {
            std::cout << R"({"ok":false,"error":"model exploded"})" << std::endl;
            continue;
        }
        if (mode == "sleep")
            std::this_thread::sleep_for(std::chrono::seconds(5));

        json response;
        try {
            if (op == "classify") {
                segroute::svol::read(request.at("volume").get<std::string>());
                if (mode == "bad-labels")
                    response = {{"ok", true}, {"scores", {{"A", 0.5}, {"B", 0.5}}}};
                else
                    response = {{"ok", true}, {"scores", {{"MCC", 1.0 - p}, {"PLD", p}}}};
            } else if (op == "segment") {
                auto v = segroute::svol::read(request.at("volume").get<std::string>());
                auto dims = v.dims();
                if (mode == "wrong-dims")
                    dims[0] += 1;
                segroute::Volume::MaskData mask(segroute::voxel_count(dims), 0);
                if (mode != "wrong-dims") {
                    auto data = v.real();
                    for (std::size_t n = 0; n < data.size(); ++n)
                        mask[n] = data[n] >= 0.5f ? 1 : 0;
                }
                segroute::Geometry g = v.geometry();
                g.dims = dims;
                segroute::svol::write(segroute::Volume(g, std::move(mask)), request.at("output").get<std::string>());
                response = {{"ok", true}};
            } else {
                response = {{"ok", false}, {"error", "unknown op"}};
            }
        } catch (const std::exception& e) {
            response = {{"ok", false}, {"error", e.what()}};
        }
        std::cout << response.dump() << std::endl;
    }
    return 0;
}
