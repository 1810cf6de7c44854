#include <counsel/cli.hpp>

int main(int argc, char **argv)
{
	return counsel::cli::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
