"""Two-sided Student t critical values, df = 1..200, index = df - 1."""

T_CRIT_05 = (
    12.70620, 4.30265, 3.18245, 2.77645, 2.57058, 2.44691, 2.36462, 2.30600,
    2.26216, 2.22814, 2.20099, 2.17881, 2.16037, 2.14479, 2.13145, 2.11991,
    2.10982, 2.10092, 2.09302, 2.08596, 2.07961, 2.07387, 2.06866, 2.06390,
    2.05954, 2.05553, 2.05183, 2.04841, 2.04523, 2.04227, 2.03951, 2.03693,
    2.03452, 2.03224, 2.03011, 2.02809, 2.02619, 2.02439, 2.02269, 2.02108,
    2.01954, 2.01808, 2.01669, 2.01537, 2.01410, 2.01290, 2.01174, 2.01063,
    2.00958, 2.00856, 2.00758, 2.00665, 2.00575, 2.00488, 2.00404, 2.00324,
    2.00247, 2.00172, 2.00100, 2.00030, 1.99962, 1.99897, 1.99834, 1.99773,
    1.99714, 1.99656, 1.99601, 1.99547, 1.99495, 1.99444, 1.99394, 1.99346,
    1.99300, 1.99254, 1.99210, 1.99167, 1.99125, 1.99085, 1.99045, 1.99006,
    1.98969, 1.98932, 1.98896, 1.98861, 1.98827, 1.98793, 1.98761, 1.98729,
    1.98698, 1.98667, 1.98638, 1.98609, 1.98580, 1.98552, 1.98525, 1.98498,
    1.98472, 1.98447, 1.98422, 1.98397, 1.98373, 1.98350, 1.98326, 1.98304,
    1.98282, 1.98260, 1.98238, 1.98217, 1.98197, 1.98177, 1.98157, 1.98137,
    1.98118, 1.98099, 1.98081, 1.98063, 1.98045, 1.98027, 1.98010, 1.97993,
    1.97976, 1.97960, 1.97944, 1.97928, 1.97912, 1.97897, 1.97882, 1.97867,
    1.97852, 1.97838, 1.97824, 1.97810, 1.97796, 1.97783, 1.97769, 1.97756,
    1.97743, 1.97730, 1.97718, 1.97705, 1.97693, 1.97681, 1.97669, 1.97658,
    1.97646, 1.97635, 1.97623, 1.97612, 1.97601, 1.97591, 1.97580, 1.97569,
    1.97559, 1.97549, 1.97539, 1.97529, 1.97519, 1.97509, 1.97500, 1.97490,
    1.97481, 1.97472, 1.97462, 1.97453, 1.97445, 1.97436, 1.97427, 1.97419,
    1.97410, 1.97402, 1.97393, 1.97385, 1.97377, 1.97369, 1.97361, 1.97353,
    1.97346, 1.97338, 1.97331, 1.97323, 1.97316, 1.97308, 1.97301, 1.97294,
    1.97287, 1.97280, 1.97273, 1.97266, 1.97260, 1.97253, 1.97246, 1.97240,
    1.97233, 1.97227, 1.97220, 1.97214, 1.97208, 1.97202, 1.97196, 1.97190,
)

T_CRIT_01 = (
    63.65674, 9.92484, 5.84091, 4.60409, 4.03214, 3.70743, 3.49948, 3.35539,
    3.24984, 3.16927, 3.10581, 3.05454, 3.01228, 2.97684, 2.94671, 2.92078,
    2.89823, 2.87844, 2.86093, 2.84534, 2.83136, 2.81876, 2.80734, 2.79694,
    2.78744, 2.77871, 2.77068, 2.76326, 2.75639, 2.75000, 2.74404, 2.73848,
    2.73328, 2.72839, 2.72381, 2.71948, 2.71541, 2.71156, 2.70791, 2.70446,
    2.70118, 2.69807, 2.69510, 2.69228, 2.68959, 2.68701, 2.68456, 2.68220,
    2.67995, 2.67779, 2.67572, 2.67373, 2.67182, 2.66998, 2.66822, 2.66651,
    2.66487, 2.66329, 2.66176, 2.66028, 2.65886, 2.65748, 2.65615, 2.65485,
    2.65360, 2.65239, 2.65122, 2.65008, 2.64898, 2.64790, 2.64686, 2.64585,
    2.64487, 2.64391, 2.64298, 2.64208, 2.64120, 2.64034, 2.63950, 2.63869,
    2.63790, 2.63712, 2.63637, 2.63563, 2.63491, 2.63421, 2.63353, 2.63286,
    2.63220, 2.63157, 2.63094, 2.63033, 2.62973, 2.62915, 2.62858, 2.62802,
    2.62747, 2.62693, 2.62641, 2.62589, 2.62539, 2.62489, 2.62441, 2.62393,
    2.62347, 2.62301, 2.62256, 2.62212, 2.62169, 2.62126, 2.62085, 2.62044,
    2.62004, 2.61964, 2.61926, 2.61888, 2.61850, 2.61814, 2.61778, 2.61742,
    2.61707, 2.61673, 2.61639, 2.61606, 2.61573, 2.61541, 2.61510, 2.61478,
    2.61448, 2.61418, 2.61388, 2.61359, 2.61330, 2.61302, 2.61274, 2.61246,
    2.61219, 2.61193, 2.61166, 2.61140, 2.61115, 2.61090, 2.61065, 2.61040,
    2.61016, 2.60992, 2.60969, 2.60946, 2.60923, 2.60900, 2.60878, 2.60856,
    2.60834, 2.60813, 2.60792, 2.60771, 2.60751, 2.60730, 2.60710, 2.60691,
    2.60671, 2.60652, 2.60633, 2.60614, 2.60595, 2.60577, 2.60559, 2.60541,
    2.60523, 2.60506, 2.60489, 2.60471, 2.60455, 2.60438, 2.60421, 2.60405,
    2.60389, 2.60373, 2.60357, 2.60342, 2.60326, 2.60311, 2.60296, 2.60281,
    2.60267, 2.60252, 2.60238, 2.60223, 2.60209, 2.60195, 2.60181, 2.60168,
    2.60154, 2.60141, 2.60128, 2.60115, 2.60102, 2.60089, 2.60076, 2.60063,
)
