#include <chrono>
#include <csignal>
#include <stop_token>
#include <thread>

#include "cotphq/cli.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

extern "C" void on_sigint(int) { g_interrupted = 1; }

}  // namespace

int main(int argc, char** argv) {
    std::stop_source stop;
    std::signal(SIGINT, on_sigint);
    // First Ctrl-C lets in-flight transcripts finish; records stay consistent.
    std::jthread watcher([&stop](std::stop_token self) {
        while (!self.stop_requested()) {
            if (g_interrupted) {
                stop.request_stop();
                std::signal(SIGINT, SIG_DFL);
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    });

    auto env = cotphq::cli::default_environment();
    env.stop = stop.get_token();
    return cotphq::cli::run_cli({argv + 1, argv + argc}, env);
}
